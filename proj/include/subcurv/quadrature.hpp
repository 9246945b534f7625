#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "subcurv/chart.hpp"
#include "subcurv/linalg.hpp"

namespace subcurv {

// Nodes and coordinate-measure weights for one coordinate. The metric volume
// factor is not folded in here; sweeps multiply by sqrt(det g) per node.
struct Rule1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Legendre nodes and weights on [-1, 1].
Rule1D gauss_legendre(int n);

// Rule for one coordinate of a chart:
//  Periodic      equispaced open trapezoid, spectral for smooth periodic data
//  GaussLegendre GL mapped to [lo, hi]
//  PolarCos      GL in the cosine of the interval mapped to [0, pi]; the
//                1/sin factor in the weights cancels the sin carried by
//                sqrt(det g), so polar degeneracies integrate cleanly
Rule1D coordinate_rule(CoordRule rule, double lo, double hi, int n);

// Tensor-product grid over a chart. Weights per coordinate only; volume
// weighting happens during the sweep so the grid stays O(dim * n) in memory.
struct QuadratureGrid {
  ChartDomain domain;
  MetricField metric;
  std::vector<Rule1D> rules;

  long long total_nodes() const;
};

QuadratureGrid build_grid(const ChartDomain& dom, const MetricField& g,
                          int nodes_per_coord);

// Per-coordinate node counts, for integrands whose resolution needs differ
// by direction.
QuadratureGrid build_grid(const ChartDomain& dom, const MetricField& g,
                          const std::vector<int>& nodes_per_coord);

// Everything an integrand may consume at a node, computed once per node and
// shared by all integrands of the sweep.
struct QuadPoint {
  Eigen::VectorXd point;
  Eigen::MatrixXd G, Ginv;
  double sqrt_det = 0.0;
  Tens3 gamma;
};

// One sweep, many integrands: returns sum_i w_i sqrt(det g)_i f(node_i) for
// each f. Parallel over fixed chunks whose partial sums reduce in index
// order, so the result is bit-identical for every thread count. threads = 0
// reads SUBCURV_THREADS, defaulting to the hardware count.
std::vector<double> integrate_many(
    const QuadratureGrid& grid,
    const std::vector<std::function<double(const QuadPoint&)>>& fs,
    int threads = 0);

double integrate(const QuadratureGrid& grid, const ScalarField& f, int threads = 0);

double volume(const QuadratureGrid& grid, int threads = 0);

// |integral of div X| / (1 + integral of |X|) over a closed model; one
// fused sweep for a batch of fields.
std::vector<double> divergence_theorem_residuals(const QuadratureGrid& grid,
                                                 const std::vector<VectorField>& fields,
                                                 int threads = 0);

}  // namespace subcurv
