#include "subcurv/submersion.hpp"

#include <cmath>

#include "doctest.h"
#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"
#include "subcurv/linalg.hpp"

using namespace subcurv;

namespace {

constexpr double kPi = 3.14159265358979323846;

ChartDomain circle_domain() {
  ChartDomain d;
  d.dim = 1;
  d.lo = Eigen::VectorXd::Zero(1);
  d.hi = Eigen::VectorXd::Constant(1, 2.0 * kPi);
  d.rule = {CoordRule::Periodic};
  d.sample_lo = Eigen::VectorXd::Constant(1, 0.05);
  d.sample_hi = Eigen::VectorXd::Constant(1, 2.0 * kPi - 0.05);
  return d;
}

ChartDomain torus_domain(int n) {
  ChartDomain d;
  d.dim = n;
  d.lo = Eigen::VectorXd::Zero(n);
  d.hi = Eigen::VectorXd::Constant(n, 2.0 * kPi);
  d.rule.assign(static_cast<std::size_t>(n), CoordRule::Periodic);
  d.sample_lo = Eigen::VectorXd::Constant(n, 0.05);
  d.sample_hi = Eigen::VectorXd::Constant(n, 2.0 * kPi - 0.05);
  return d;
}

// (eta, xi1, xi2) chart of the 3-sphere; eta is the polar-type coordinate.
ChartDomain sphere3_domain() {
  ChartDomain d;
  d.dim = 3;
  d.lo = Eigen::VectorXd::Zero(3);
  d.hi = Eigen::VectorXd(3);
  d.hi << kPi / 2.0, 2.0 * kPi, 2.0 * kPi;
  d.rule = {CoordRule::PolarCos, CoordRule::Periodic, CoordRule::Periodic};
  d.sample_lo = Eigen::VectorXd(3);
  d.sample_lo << 0.15, 0.1, 0.1;
  d.sample_hi = Eigen::VectorXd(3);
  d.sample_hi << kPi / 2.0 - 0.15, 2.0 * kPi - 0.1, 2.0 * kPi - 0.1;
  return d;
}

ChartDomain sphere2_domain() {
  ChartDomain d;
  d.dim = 2;
  d.lo = Eigen::VectorXd::Zero(2);
  d.hi = Eigen::VectorXd(2);
  d.hi << kPi, 2.0 * kPi;
  d.rule = {CoordRule::PolarCos, CoordRule::Periodic};
  d.sample_lo = Eigen::VectorXd(2);
  d.sample_lo << 0.2, 0.1;
  d.sample_hi = Eigen::VectorXd(2);
  d.sample_hi << kPi - 0.2, 2.0 * kPi - 0.1;
  return d;
}

ChartDomain box_domain(int n, double lo, double hi) {
  ChartDomain d;
  d.dim = n;
  d.lo = Eigen::VectorXd::Constant(n, lo);
  d.hi = Eigen::VectorXd::Constant(n, hi);
  d.rule.assign(static_cast<std::size_t>(n), CoordRule::GaussLegendre);
  const double m = 0.05 * (hi - lo);
  d.sample_lo = Eigen::VectorXd::Constant(n, lo + m);
  d.sample_hi = Eigen::VectorXd::Constant(n, hi - m);
  return d;
}

MetricField flat(int n) {
  return MetricField([n](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    (void)q;
    MatS<S> g = MatS<S>::Zero(n, n);
    for (int i = 0; i < n; ++i) g(i, i) = S(1.0);
    return g;
  });
}

MetricField round2(double r) {
  return MetricField([r](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(2, 2);
    g(0, 0) = S(r * r);
    auto s = sin(q(0));
    g(1, 1) = S(r * r) * s * s;
    return g;
  });
}

MetricField round3(double r) {
  return MetricField([r](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(3, 3);
    auto c = cos(q(0));
    auto s = sin(q(0));
    g(0, 0) = S(r * r);
    g(1, 1) = S(r * r) * c * c;
    g(2, 2) = S(r * r) * s * s;
    return g;
  });
}

// q -> (q_0, ..., q_{nb-1})
MapField take_first(int nb) {
  return MapField([nb](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    VecS<S> r(nb);
    for (int i = 0; i < nb; ++i) r(i) = q(i);
    return r;
  });
}

// q -> (q_1, ..., q_nb)
MapField drop_first(int nb) {
  return MapField([nb](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    VecS<S> r(nb);
    for (int i = 0; i < nb; ++i) r(i) = q(i + 1);
    return r;
  });
}

MapField constant_jacobian(const Eigen::MatrixXd& j) {
  return MapField([j](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    (void)q;
    VecS<S> r(j.rows() * j.cols());
    for (int a = 0; a < j.rows(); ++a)
      for (int c = 0; c < j.cols(); ++c) r(a * j.cols() + c) = S(j(a, c));
    return r;
  });
}

SubmersionSpec make_flat2_over_circle() {
  SubmersionSpec s;
  s.total_domain = torus_domain(2);
  s.total_metric = flat(2);
  s.base_domain = circle_domain();
  s.base_metric = flat(1);
  s.projection = take_first(1);
  Eigen::MatrixXd j(1, 2);
  j << 1.0, 0.0;
  s.jacobian = constant_jacobian(j);
  s.fibre_coords = {1};
  s.fibre_chart = [](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = circle_domain();
    fc.metric = flat(1);
    fc.point = p.segment(1, 1);
    return fc;
  };
  return s;
}

// S^1 x S^3(r), projected onto the sphere factor.
SubmersionSpec make_product_over_sphere(double r) {
  SubmersionSpec s;
  ChartDomain t;
  t.dim = 4;
  t.lo = Eigen::VectorXd::Zero(4);
  t.hi = Eigen::VectorXd(4);
  t.hi << 2.0 * kPi, kPi / 2.0, 2.0 * kPi, 2.0 * kPi;
  t.rule = {CoordRule::Periodic, CoordRule::PolarCos, CoordRule::Periodic,
            CoordRule::Periodic};
  t.sample_lo = Eigen::VectorXd(4);
  t.sample_lo << 0.05, 0.15, 0.1, 0.1;
  t.sample_hi = Eigen::VectorXd(4);
  t.sample_hi << 2.0 * kPi - 0.05, kPi / 2.0 - 0.15, 2.0 * kPi - 0.1,
      2.0 * kPi - 0.1;
  s.total_domain = t;
  s.total_metric = MetricField([r](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(4, 4);
    auto c = cos(q(1));
    auto sn = sin(q(1));
    g(0, 0) = S(1.0);
    g(1, 1) = S(r * r);
    g(2, 2) = S(r * r) * c * c;
    g(3, 3) = S(r * r) * sn * sn;
    return g;
  });
  s.base_domain = sphere3_domain();
  s.base_metric = round3(r);
  s.projection = drop_first(3);
  Eigen::MatrixXd j(3, 4);
  j << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  s.jacobian = constant_jacobian(j);
  s.fibre_coords = {0};
  s.fibre_chart = [](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = circle_domain();
    fc.metric = flat(1);
    fc.point = p.segment(0, 1);
    return fc;
  };
  return s;
}

// Same product with the sphere block scaled by e^{2c} and the factor
// recorded, so the auxiliary metric is the unscaled product.
SubmersionSpec make_const_factor_product(double c) {
  SubmersionSpec s = make_product_over_sphere(1.0);
  const double w = std::exp(2.0 * c);
  s.total_metric = MetricField([w](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(4, 4);
    auto co = cos(q(1));
    auto sn = sin(q(1));
    g(0, 0) = S(1.0);
    g(1, 1) = S(w);
    g(2, 2) = S(w) * co * co;
    g(3, 3) = S(w) * sn * sn;
    return g;
  });
  s.conformal_factor = ScalarField([c](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    (void)q;
    return S(c);
  });
  return s;
}

// Unit 3-sphere over the half-radius 2-sphere along the circle action.
SubmersionSpec make_hopf() {
  SubmersionSpec s;
  s.total_domain = sphere3_domain();
  s.total_metric = round3(1.0);
  s.base_domain = sphere2_domain();
  s.base_metric = round2(0.5);
  s.projection = MapField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    VecS<S> r(2);
    r(0) = 2.0 * q(0);
    r(1) = q(2) - q(1);
    return r;
  });
  Eigen::MatrixXd j(2, 3);
  j << 2, 0, 0, 0, -1, 1;
  s.jacobian = constant_jacobian(j);
  return s;
}

// dx^2 + e^{2 a sin x} (round 3-sphere), fibred over the circle.
SubmersionSpec make_warped_over_circle(double a) {
  SubmersionSpec s;
  ChartDomain t;
  t.dim = 4;
  t.lo = Eigen::VectorXd::Zero(4);
  t.hi = Eigen::VectorXd(4);
  t.hi << 2.0 * kPi, kPi / 2.0, 2.0 * kPi, 2.0 * kPi;
  t.rule = {CoordRule::Periodic, CoordRule::PolarCos, CoordRule::Periodic,
            CoordRule::Periodic};
  t.sample_lo = Eigen::VectorXd(4);
  t.sample_lo << 0.05, 0.15, 0.1, 0.1;
  t.sample_hi = Eigen::VectorXd(4);
  t.sample_hi << 2.0 * kPi - 0.05, kPi / 2.0 - 0.15, 2.0 * kPi - 0.1,
      2.0 * kPi - 0.1;
  s.total_domain = t;
  s.total_metric = MetricField([a](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::exp;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(4, 4);
    auto w = exp(2.0 * a * sin(q(0)));
    auto c = cos(q(1));
    auto sn = sin(q(1));
    g(0, 0) = S(1.0);
    g(1, 1) = w;
    g(2, 2) = w * c * c;
    g(3, 3) = w * sn * sn;
    return g;
  });
  s.base_domain = circle_domain();
  s.base_metric = flat(1);
  s.projection = take_first(1);
  Eigen::MatrixXd j(1, 4);
  j << 1, 0, 0, 0;
  s.jacobian = constant_jacobian(j);
  s.fibre_coords = {1, 2, 3};
  s.fibre_chart = [a](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = sphere3_domain();
    const double scale = std::exp(2.0 * a * std::sin(p(0)));
    fc.metric = MetricField([scale](const auto& q) {
      using S = std::decay_t<decltype(q(0))>;
      using std::cos;
      using std::sin;
      MatS<S> g = MatS<S>::Zero(3, 3);
      auto c = cos(q(0));
      auto sn = sin(q(0));
      g(0, 0) = S(scale);
      g(1, 1) = S(scale) * c * c;
      g(2, 2) = S(scale) * sn * sn;
      return g;
    });
    fc.point = p.segment(1, 3);
    return fc;
  };
  return s;
}

// Same total space viewed over the sphere factor, with the warp recorded as
// the conformal factor; the auxiliary metric is then a plain product.
SubmersionSpec make_warped_over_sphere(double a) {
  SubmersionSpec s = make_warped_over_circle(a);
  s.base_domain = sphere3_domain();
  s.base_metric = round3(1.0);
  s.projection = drop_first(3);
  Eigen::MatrixXd j(3, 4);
  j << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  s.jacobian = constant_jacobian(j);
  s.conformal_factor = ScalarField([a](const auto& q) {
    using std::sin;
    return a * sin(q(0));
  });
  s.fibre_coords = {0};
  s.fibre_chart = [](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = circle_domain();
    fc.metric = flat(1);
    fc.point = p.segment(0, 1);
    return fc;
  };
  return s;
}

// Two circle fibres warped by different profiles; the fibres cannot be
// umbilical because the two principal directions bend differently.
SubmersionSpec make_doubly_warped() {
  SubmersionSpec s;
  s.total_domain = torus_domain(3);
  s.total_metric = MetricField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(3, 3);
    auto p1 = 1.0 + 0.3 * sin(q(0));
    auto p2 = 1.0 + 0.4 * cos(q(0));
    g(0, 0) = S(1.0);
    g(1, 1) = p1 * p1;
    g(2, 2) = p2 * p2;
    return g;
  });
  s.base_domain = circle_domain();
  s.base_metric = flat(1);
  s.projection = take_first(1);
  Eigen::MatrixXd j(1, 3);
  j << 1, 0, 0;
  s.jacobian = constant_jacobian(j);
  s.fibre_coords = {1, 2};
  s.fibre_chart = [](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = torus_domain(2);
    const double p1 = 1.0 + 0.3 * std::sin(p(0));
    const double p2 = 1.0 + 0.4 * std::cos(p(0));
    fc.metric = MetricField([p1, p2](const auto& q) {
      using S = std::decay_t<decltype(q(0))>;
      (void)q;
      MatS<S> g = MatS<S>::Zero(2, 2);
      g(0, 0) = S(p1 * p1);
      g(1, 1) = S(p2 * p2);
      return g;
    });
    fc.point = p.segment(1, 2);
    return fc;
  };
  return s;
}

// Dense analytic metric with no product structure, plus an unrelated factor
// field; only the formal split identities are expected to hold here.
SubmersionSpec make_generic(bool with_factor) {
  SubmersionSpec s;
  s.total_domain = box_domain(3, 0.2, 1.2);
  s.total_metric = MetricField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    using std::sin;
    MatS<S> g = MatS<S>::Zero(3, 3);
    g(0, 0) = 2.0 + 0.1 * sin(q(0) + q(1));
    g(1, 1) = 1.5 + 0.1 * cos(q(2));
    g(2, 2) = 1.0 + 0.1 * q(0) * q(0);
    g(0, 1) = g(1, 0) = 0.05 * q(0) * q(1);
    g(0, 2) = g(2, 0) = 0.02 * q(0);
    g(1, 2) = g(2, 1) = 0.03 * sin(q(2));
    return g;
  });
  s.base_domain = box_domain(1, 0.2, 1.2);
  s.base_metric = flat(1);
  s.projection = take_first(1);
  Eigen::MatrixXd j(1, 3);
  j << 1, 0, 0;
  s.jacobian = constant_jacobian(j);
  if (with_factor) {
    s.conformal_factor = ScalarField([](const auto& q) {
      using std::cos;
      using std::sin;
      return 0.1 * sin(q(0) + q(1)) + 0.05 * cos(q(2));
    });
  }
  s.fibre_coords = {1, 2};
  s.fibre_chart = [s0 = s.total_metric](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = box_domain(2, 0.2, 1.2);
    fc.metric = MetricField([s0, x = p(0)](const auto& q) {
      using S = std::decay_t<decltype(q(0))>;
      VecS<S> full(3);
      full(0) = S(x);
      full(1) = q(0);
      full(2) = q(1);
      MatS<S> g = s0(full);
      MatS<S> r(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int jj = 0; jj < 2; ++jj) r(i, jj) = g(i + 1, jj + 1);
      return r;
    });
    fc.point = p.segment(1, 2);
    return fc;
  };
  return s;
}

// Flat space with a bent projection, so the projection jacobian varies.
SubmersionSpec make_bent_projection() {
  SubmersionSpec s;
  s.total_domain = box_domain(3, -1.0, 1.0);
  s.total_metric = flat(3);
  s.base_domain = box_domain(1, -2.0, 2.0);
  s.base_metric = flat(1);
  s.projection = MapField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::sin;
    VecS<S> r(1);
    r(0) = q(0) + 0.2 * sin(q(1));
    return r;
  });
  s.jacobian = MapField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    using std::cos;
    VecS<S> r(3);
    r(0) = S(1.0);
    r(1) = 0.2 * cos(q(1));
    r(2) = S(0.0);
    return r;
  });
  return s;
}

double gnorm2(const Eigen::VectorXd& v, const Eigen::MatrixXd& g) {
  return inner<double>(v, g, v);
}

}  // namespace

TEST_CASE("flat torus over circle: trivial split, all tensors vanish") {
  SubmersionSpec s = make_flat2_over_circle();
  s.validate();
  Eigen::VectorXd q(2);
  q << 1.0, 2.0;

  SplitFrame fr = split_frame(s, q);
  CHECK(fr.vertical.count() == 1);
  CHECK(fr.horizontal.count() == 1);
  CHECK(fr.vertical.vector(0)(0) == doctest::Approx(0.0));
  CHECK(fr.vertical.vector(0)(1) == doctest::Approx(1.0));
  CHECK(fr.horizontal.vector(0)(0) == doctest::Approx(1.0));

  SubPoint sp = sub_point(s, q);
  CHECK((sp.PH - Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((sp.PV - Eigen::Vector2d(0, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-13);

  FundamentalTensors ft = fundamental_tensors(s, q);
  CHECK(ft.normT2 < 1e-12);
  CHECK(ft.normA2 < 1e-12);
  CHECK(ft.normN2 < 1e-12);

  StructuralResiduals sr = structural_residuals(s, q, 0);
  CHECK(sr.max_line < 1e-12);

  Eigen::MatrixXd pts = halton_points(s.total_domain, 7, 0);
  CHECK(conformal_check(s, pts) < 1e-12);
}

TEST_CASE("product over sphere factor: frames, projectors, conformal check") {
  const double r = 1.3;
  SubmersionSpec s = make_product_over_sphere(r);
  s.validate();
  Eigen::VectorXd q(4);
  q << 1.2, 0.7, 2.1, 4.0;

  SplitFrame fr = split_frame(s, q);
  Eigen::MatrixXd G = s.total_metric(Eigen::VectorXd(q));
  CHECK(fr.vertical.count() == 1);
  CHECK(fr.horizontal.count() == 3);
  // orthonormality across the whole split
  Eigen::MatrixXd all(4, 4);
  all.col(0) = fr.vertical.vector(0);
  for (int i = 0; i < 3; ++i) all.col(i + 1) = fr.horizontal.vector(i);
  Eigen::MatrixXd gram = all.transpose() * G * all;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-11);
  // vertical really is the kernel of the projection differential
  SubPoint sp = sub_point(s, q);
  CHECK((sp.J * fr.vertical.vectors).cwiseAbs().maxCoeff() < 1e-12);

  FundamentalTensors ft = fundamental_tensors(s, q);
  CHECK(ft.normT2 < 1e-11);
  CHECK(ft.normA2 < 1e-11);
  CHECK(ft.normN2 < 1e-11);

  StructuralResiduals sr = structural_residuals(s, q, 3);
  CHECK(sr.max_line < 1e-9);

  Eigen::MatrixXd pts = halton_points(s.total_domain, 9, 1);
  CHECK(conformal_check(s, pts) < 1e-11);

  REQUIRE(bool(s.fibre_chart));
  FibreChart fc = s.fibre_chart(q);
  CHECK(fc.domain.dim == 1);
  CHECK(fc.point(0) == doctest::Approx(1.2));
}

TEST_CASE("constant conformal factor on a product") {
  const double c = 0.25;
  SubmersionSpec s = make_const_factor_product(c);
  s.validate();
  Eigen::VectorXd q(4);
  q << 2.0, 0.8, 1.5, 3.3;

  Eigen::MatrixXd pts = halton_points(s.total_domain, 9, 2);
  CHECK(conformal_check(s, pts) < 1e-11);

  FundamentalTensors ft = fundamental_tensors(s, q);
  CHECK(ft.normT2 < 1e-11);
  CHECK(ft.normA2 < 1e-11);
  CHECK(ft.normN2 < 1e-11);

  StructuralResiduals sr = structural_residuals(s, q, 5);
  CHECK(sr.max_line < 1e-9);

  // dropping the factor leaves a visibly non-compatible metric
  SubmersionSpec bare = s;
  bare.conformal_factor = ScalarField();
  CHECK(conformal_check(bare, pts) > 0.3);
}

TEST_CASE("hopf map: riemannian submersion onto the half-radius sphere") {
  SubmersionSpec s = make_hopf();
  s.validate();
  CHECK(s.fibre_dim() == 1);
  CHECK(!s.fibre_chart);
  Eigen::VectorXd q(3);
  q << 0.6, 1.1, 2.7;

  Eigen::MatrixXd pts = halton_points(s.total_domain, 12, 0);
  CHECK(conformal_check(s, pts) < 1e-11);

  SplitFrame fr = split_frame(s, q);
  Eigen::VectorXd u = fr.vertical.vector(0);
  CHECK(std::abs(u(0)) < 1e-12);
  CHECK(u(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(u(2) == doctest::Approx(1.0).epsilon(1e-10));

  Eigen::MatrixXd G = s.total_metric(Eigen::VectorXd(q));
  FundamentalTensors ft = fundamental_tensors(s, q);
  CHECK(ft.normT2 < 1e-10);
  CHECK(ft.normN2 < 1e-10);
  CHECK(ft.normA2 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::sqrt(gnorm2(ft.a_hh[0][1], G)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gnorm2(ft.a_hh[0][0], G) < 1e-10);
  CHECK(gnorm2(ft.a_hh[1][1], G) < 1e-10);
  CHECK((ft.a_hh[0][1] + ft.a_hh[1][0]).cwiseAbs().maxCoeff() < 1e-9);
  // mixed block carries the same total weight
  double mixed = 0.0;
  for (int i = 0; i < 2; ++i) mixed += gnorm2(ft.a_hv[i][0], G);
  CHECK(mixed == doctest::Approx(2.0).epsilon(1e-9));

  // blocks land in the advertised distributions
  SubPoint sp = sub_point(s, q);
  CHECK((sp.PH * ft.a_hh[0][1]).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((sp.PV * ft.a_hv[0][0]).cwiseAbs().maxCoeff() < 1e-9);

  // duality between the two blocks of the horizontal tensor
  const Eigen::VectorXd x2 = fr.horizontal.vector(1);
  const double d1 = inner<double>(ft.a_hh[0][1], G, u);
  const double d2 = inner<double>(x2, G, ft.a_hv[0][0]);
  CHECK(d1 == doctest::Approx(-d2).epsilon(1e-9));
  CHECK(std::abs(d1) == doctest::Approx(1.0).epsilon(1e-9));

  StructuralResiduals sr = structural_residuals(s, q, 1);
  CHECK(sr.max_line < 1e-9);

  UmbilicalReport ur = umbilical_check(s, pts);
  CHECK(ur.max_residual < 1e-9);
  CHECK(ur.axis.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hopf with wrong conformal factor is flagged") {
  SubmersionSpec s = make_hopf();
  s.conformal_factor = ScalarField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    (void)q;
    return S(0.2);
  });
  Eigen::MatrixXd pts = halton_points(s.total_domain, 12, 0);
  CHECK(conformal_check(s, pts) > 0.05);
}

TEST_CASE("warped product over the circle: closed-form fibre tensors") {
  const double a = 0.3;
  SubmersionSpec s = make_warped_over_circle(a);
  s.validate();
  Eigen::VectorXd q(4);
  q << 0.7, 0.6, 1.1, 2.3;
  const double fp = a * std::cos(q(0));
  const double fpp = -a * std::sin(q(0));

  Eigen::MatrixXd pts = halton_points(s.total_domain, 9, 3);
  CHECK(conformal_check(s, pts) < 1e-11);

  Eigen::MatrixXd G = s.total_metric(Eigen::VectorXd(q));
  SplitFrame fr = split_frame(s, q);
  FundamentalTensors ft = fundamental_tensors(s, q);

  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd want = Eigen::VectorXd::Zero(4);
      if (j == k) want(0) = -fp;
      CHECK((ft.t_vv[j][k] - want).cwiseAbs().maxCoeff() < 1e-9);
    }
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd want = fp * fr.vertical.vector(j);
    CHECK((ft.t_vh[j][0] - want).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(ft.nvec(0) == doctest::Approx(-3.0 * fp).epsilon(1e-9));
  CHECK(ft.normT2 == doctest::Approx(3.0 * fp * fp).epsilon(1e-9));
  CHECK(ft.normN2 == doctest::Approx(9.0 * fp * fp).epsilon(1e-9));
  CHECK(ft.normA2 < 1e-12);

  // frame sums reproduce the frame-free contractions
  double tvv = 0.0, tvh = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) tvv += gnorm2(ft.t_vv[j][k], G);
    tvh += gnorm2(ft.t_vh[j][0], G);
  }
  CHECK(tvv == doctest::Approx(ft.normT2).epsilon(1e-9));
  CHECK(tvh == doctest::Approx(ft.normT2).epsilon(1e-9));

  SubPoint sp = sub_point(s, q);
  CHECK(sp.dnvec(0, 0) == doctest::Approx(-3.0 * fpp).epsilon(1e-8));

  // first covariant derivative of the fibre tensor, traced horizontally
  std::vector<Tens3> covt = covariant_12(sp.t, sp.dt, sp.gamma_aux);
  const Eigen::VectorXd x1 = fr.horizontal.vector(0);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd uj = fr.vertical.vector(j);
      const Eigen::VectorXd uk = fr.vertical.vector(k);
      double dt = 0.0;
      for (int c = 0; c < 4; ++c)
        for (int kk = 0; kk < 4; ++kk)
          for (int m = 0; m < 4; ++m)
            for (int b = 0; b < 4; ++b)
              dt += x1(c) * covt[static_cast<std::size_t>(c)][static_cast<std::size_t>(kk)](m, b) *
                    uj(m) * uk(b) * G(static_cast<int>(kk), 0) * x1(0);
      const double want = (j == k) ? -fpp : 0.0;
      CHECK(std::abs(dt - want) < 1e-7);
    }

  // divergence of the trace with the metric connection
  const double divn = divergence_vec(sp.nvec, sp.dnvec, sp.gamma);
  CHECK(divn == doctest::Approx(-3.0 * fpp - 9.0 * fp * fp).epsilon(1e-7));

  StructuralResiduals sr = structural_residuals(s, q, 2);
  CHECK(sr.max_line < 1e-9);

  Eigen::MatrixXd one(4, 1);
  one.col(0) = q;
  UmbilicalReport ur = umbilical_check(s, one);
  CHECK(ur.max_residual < 1e-9);
  CHECK(ur.axis(0) == doctest::Approx(-fp).epsilon(1e-8));

  REQUIRE(bool(s.fibre_chart));
  FibreChart fc = s.fibre_chart(q);
  CurvatureBundle cb = curvature_bundle(fc.metric, fc.point);
  const double scale = std::exp(2.0 * a * std::sin(q(0)));
  CHECK(cb.scalar == doctest::Approx(6.0 / scale).epsilon(1e-8));
}

TEST_CASE("warped product over the sphere: conformal view is a product") {
  const double a = 0.3;
  SubmersionSpec s = make_warped_over_sphere(a);
  s.validate();
  Eigen::VectorXd q(4);
  q << 0.7, 0.6, 1.1, 2.3;

  Eigen::MatrixXd pts = halton_points(s.total_domain, 9, 4);
  CHECK(conformal_check(s, pts) < 1e-10);

  FundamentalTensors ft = fundamental_tensors(s, q);
  CHECK(ft.normT2 < 1e-11);
  CHECK(ft.normA2 < 1e-11);
  CHECK(ft.normN2 < 1e-11);

  SubPoint sp = sub_point(s, q);
  // the gradient of the factor points along the fibres
  Eigen::VectorXd hgrad = sp.PH * (sp.Ginv * sp.df);
  CHECK(hgrad.cwiseAbs().maxCoeff() < 1e-12);
  // the fibre tensor vanishes as a field, so its derivative does too
  double dmax = 0.0;
  for (const auto& layer : sp.dt)
    for (const auto& m : layer) dmax = std::max(dmax, m.cwiseAbs().maxCoeff());
  CHECK(dmax < 1e-9);

  StructuralResiduals sr = structural_residuals(s, q, 7);
  CHECK(sr.max_line < 1e-9);

  UmbilicalReport ur = umbilical_check(s, pts);
  CHECK(ur.max_residual < 1e-9);
  CHECK(ur.axis.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("doubly warped torus fibres are not umbilical") {
  SubmersionSpec s = make_doubly_warped();
  s.validate();
  Eigen::VectorXd q(3);
  q << kPi / 2.0, 1.0, 2.0;

  Eigen::MatrixXd pts = halton_points(s.total_domain, 11, 0);
  CHECK(conformal_check(s, pts) < 1e-11);

  FundamentalTensors ft = fundamental_tensors(s, q);
  // p1'/p1 = 0 and p2'/p2 = -0.4 at x = pi/2
  CHECK(ft.t_vv[0][0].cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ft.t_vv[1][1](0) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(ft.t_vv[0][1].cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ft.t_vv[1][0].cwiseAbs().maxCoeff() < 1e-9);

  Eigen::MatrixXd one(3, 1);
  one.col(0) = q;
  UmbilicalReport ur = umbilical_check(s, one);
  CHECK(ur.max_residual == doctest::Approx(std::sqrt(0.08)).epsilon(1e-6));
  CHECK(ur.axis(0) == doctest::Approx(0.2).epsilon(1e-6));

  UmbilicalReport all = umbilical_check(s, pts);
  CHECK(all.max_residual > 0.05);
}

TEST_CASE("generic metric passes the formal split identities") {
  for (bool with_factor : {false, true}) {
    SubmersionSpec s = make_generic(with_factor);
    s.validate();
    Eigen::MatrixXd pts = halton_points(s.total_domain, 5, 0);
    for (int p = 0; p < pts.cols(); ++p) {
      StructuralResiduals sr = structural_residuals(s, pts.col(p), static_cast<unsigned>(p));
      CHECK(sr.max_line < 1e-9);
    }

    Eigen::VectorXd q(3);
    q << 0.5, 0.9, 0.8;
    Eigen::MatrixXd G = s.total_metric(Eigen::VectorXd(q));
    SplitFrame fr = split_frame(s, q);
    SubPoint sp = sub_point(s, q);
    FundamentalTensors ft = fundamental_tensors(s, q);

    // block membership
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK((sp.PV * ft.t_vv[j][k]).cwiseAbs().maxCoeff() < 1e-9);
    for (int j = 0; j < 2; ++j)
      CHECK((sp.PH * ft.t_vh[j][0]).cwiseAbs().maxCoeff() < 1e-9);

    // skew symmetry between the two blocks
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const double lhs = inner<double>(ft.t_vv[j][k], G, fr.horizontal.vector(0));
        const double rhs = inner<double>(fr.vertical.vector(k), G, ft.t_vh[j][0]);
        CHECK(std::abs(lhs + rhs) < 1e-9);
      }

    // frame sums match the frame-free norms
    double tvv = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) tvv += gnorm2(ft.t_vv[j][k], G);
    CHECK(std::abs(tvv - ft.normT2) < 1e-10);
  }
}

TEST_CASE("bent projection: varying jacobian and basic lifts") {
  SubmersionSpec s = make_bent_projection();
  s.validate();
  Eigen::VectorXd q(3);
  q << 0.3, -0.4, 0.2;

  StructuralResiduals sr = structural_residuals(s, q, 9);
  CHECK(sr.max_line < 1e-9);

  SubPoint sp = sub_point(s, q);
  Eigen::MatrixXd jl = sp.J * sp.basic_lift;
  CHECK((jl - Eigen::MatrixXd::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  // lifted base fields stay projectable: d(J L) = 0 coordinatewise
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd d = sp.J * sp.dbasic_lift[static_cast<std::size_t>(c)] +
                        sp.dJ[static_cast<std::size_t>(c)] * sp.basic_lift;
    CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("spec validation flags inconsistent input") {
  // jacobian that does not match the projection
  SubmersionSpec s = make_flat2_over_circle();
  Eigen::MatrixXd j(1, 2);
  j << 0.0, 1.0;
  s.jacobian = constant_jacobian(j);
  CHECK_THROWS_AS(s.validate(), PreconditionError);

  // rank-deficient projection differential
  SubmersionSpec r;
  r.total_domain = box_domain(3, -1.0, 1.0);
  r.total_metric = flat(3);
  r.base_domain = box_domain(2, -2.0, 2.0);
  r.base_metric = flat(2);
  r.projection = MapField([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    VecS<S> out(2);
    out(0) = q(0);
    out(1) = q(0);
    return out;
  });
  Eigen::MatrixXd jj(2, 3);
  jj << 1, 0, 0, 1, 0, 0;
  r.jacobian = constant_jacobian(jj);
  CHECK_THROWS_AS(r.validate(), NotASubmersionError);

  // fibre coordinates announced without a chart builder
  SubmersionSpec f = make_flat2_over_circle();
  f.fibre_chart = nullptr;
  CHECK_THROWS_AS(f.validate(), PreconditionError);
}
