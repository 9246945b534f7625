#pragma once

#include <Eigen/Dense>
#include <functional>
#include <type_traits>
#include <vector>

#include "subcurv/dual.hpp"
#include "subcurv/errors.hpp"

namespace subcurv {

// Quadrature family attached to one coordinate of a chart.
//  GaussLegendre: open interval, no boundary identification.
//  Periodic: endpoints identified; trapezoid rule is spectrally accurate.
//  PolarCos: polar-angle-like coordinate whose metric degenerates at the
//  interval ends; nodes are Gauss-Legendre in the cosine of the mapped angle,
//  which keeps the weight finite at the poles.
enum class CoordRule { GaussLegendre, Periodic, PolarCos };

// Rectangular coordinate box. [lo, hi] is the integration range; sampling for
// pointwise checks uses the possibly smaller [sample_lo, sample_hi] so chart
// caps and coordinate degeneracies stay out of the sample set.
struct ChartDomain {
  int dim = 0;
  Eigen::VectorXd lo, hi;
  std::vector<CoordRule> rule;
  Eigen::VectorXd sample_lo, sample_hi;

  void validate() const;
};

// Callable evaluatable at three scalar levels: plain values, first
// derivatives, and second derivatives. The constructor takes one generic
// callable and freezes an instantiation per level, so call sites never see
// templates and the library stays a plain (non-header-only) target.
template <class Out0, class Out1, class Out2, class In0, class In1, class In2>
class LeveledField {
 public:
  LeveledField() = default;
  template <class F>
    requires(!std::is_same_v<std::decay_t<F>, LeveledField>)
  LeveledField(F f) : f0_(f), f1_(f), f2_(std::move(f)) {}

  Out0 operator()(const In0& q) const { return f0_(q); }
  Out1 operator()(const In1& q) const { return f1_(q); }
  Out2 operator()(const In2& q) const { return f2_(q); }

  bool empty() const { return !f0_; }

 private:
  std::function<Out0(const In0&)> f0_;
  std::function<Out1(const In1&)> f1_;
  std::function<Out2(const In2&)> f2_;
};

using MetricField =
    LeveledField<MatS<double>, MatS<D1>, MatS<D2>, VecS<double>, VecS<D1>, VecS<D2>>;
using ScalarField = LeveledField<double, D1, D2, VecS<double>, VecS<D1>, VecS<D2>>;
using VectorField =
    LeveledField<VecS<double>, VecS<D1>, VecS<D2>, VecS<double>, VecS<D1>, VecS<D2>>;

// Map field: chart coordinates of one manifold to chart coordinates of
// another (projections, embeddings).
using MapField = VectorField;

// Low-discrepancy points in the sampling box. Column k is point k; the
// sequence index starts at seed + 1 so distinct seeds give disjoint runs.
Eigen::MatrixXd halton_points(const ChartDomain& dom, int count, unsigned seed);

// Radical inverse of i in the given base, the 1-d Halton kernel.
double radical_inverse(long long i, int base);

}  // namespace subcurv
