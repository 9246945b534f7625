#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subcurv/chart.hpp"
#include "subcurv/submersion.hpp"

namespace subcurv {

// One factor of a product total space: its Einstein data and its share of
// the horizontal/vertical dimensions under the model's submersion (both
// zero for bare manifolds). The integral criteria consume these.
struct ComponentInfo {
  std::string name;
  int dim = 0;
  int h_dim = 0, v_dim = 0;
  double einstein_lambda = 0.0;
  double scalar = 0.0;
  bool einstein = false;
  bool lcf = false;
};

// Trigonometric polynomial in one circle coordinate.
struct TrigPoly {
  double c0 = 0.0;
  std::vector<std::pair<int, double>> sin_terms;  // (frequency, coefficient)
  std::vector<std::pair<int, double>> cos_terms;

  template <class S>
  S operator()(const S& x) const {
    using std::cos;
    using std::sin;
    S acc(c0);
    for (const auto& [k, a] : sin_terms) acc += a * sin(static_cast<double>(k) * x);
    for (const auto& [k, a] : cos_terms) acc += a * cos(static_cast<double>(k) * x);
    return acc;
  }

  double amplitude() const;            // |c0| + sum of |coefficients|
  bool is_constant() const { return sin_terms.empty() && cos_terms.empty(); }
};

// Smooth global scalars are sums of products of one-coordinate cosine
// waves, cos(freq * q_coord + phase). Restrictions of ambient polynomials
// to the built-in manifolds all take this shape, which keeps seeded fields
// smooth across chart seams and poles.
struct WaveFactor {
  int coord = 0;
  double freq = 1.0;
  double phase = 0.0;
};

struct WaveTerm {
  double coeff = 1.0;
  std::vector<WaveFactor> factors;
};

template <class S>
S eval_waves(const std::vector<WaveTerm>& terms, const VecS<S>& q) {
  using std::cos;
  S acc(0.0);
  for (const auto& t : terms) {
    S prod(t.coeff);
    for (const auto& w : t.factors)
      prod = prod * cos(w.freq * q(w.coord) + w.phase);
    acc += prod;
  }
  return acc;
}

// A built-in manifold, optionally carrying a submersion, with closed-form
// metadata. Construction re-verifies every metadata value numerically
// (ModelError on disagreement), so a descriptor in hand is trustworthy.
struct ModelDescriptor {
  std::string name;  // resolved name including parameters
  ChartDomain domain;
  MetricField metric;

  bool has_submersion = false;
  SubmersionSpec submersion;

  double volume = 0.0;
  std::optional<double> scalar_curvature;       // set when constant
  std::optional<double> einstein_lambda;        // set when Einstein
  std::optional<double> fibre_einstein_lambda;  // same constant on every fibre
  bool lcf = false;                             // conformally flat total space
  std::vector<ComponentInfo> components;        // empty unless a metric product

  std::vector<WaveTerm> wave_basis;  // generating set for seeded scalars

  // Per-coordinate node counts for the load-time volume check; empty picks
  // a uniform count from the dimension.
  std::vector<int> verify_nodes;
};

using ModelParams = std::map<std::string, std::string>;

// Construct a built-in by name. Recognized names: circle, flat_torus,
// sphere, product, warped_s1_s3, hopf, trivial_submersion; parameters are
// flat key/value strings (see builtin_models for the per-model keys).
// Unknown names, unknown keys, or malformed values throw ConfigError; a
// descriptor that fails its numerical self-verification throws ModelError.
ModelDescriptor make_model(const std::string& name, const ModelParams& params);

// (name, parameter summary) for every built-in, in fixed order.
std::vector<std::pair<std::string, std::string>> builtin_models();

// Re-run the numerical checks backing the descriptor's metadata fields;
// throws ModelError on any disagreement. make_model calls this before
// returning.
void verify_model(const ModelDescriptor& m);

// Deterministic smooth scalar on the model: wave-basis combination with
// coefficients drawn from the radical-inverse sequence of `seed`.
ScalarField seeded_scalar(const ModelDescriptor& m, unsigned seed);

// Metric gradient of the same seeded scalar, as a field. Globally smooth,
// so its divergence integrates to zero over the (closed) model.
VectorField seeded_gradient_field(const ModelDescriptor& m, unsigned seed);

}  // namespace subcurv
