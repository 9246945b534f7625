#include "subcurv/quadrature.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "subcurv/errors.hpp"

using namespace subcurv;

namespace {

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

MetricField flat(int n) {
  return MetricField([n](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    (void)q;
    MatS<S> g = MatS<S>::Zero(n, n);
    for (int i = 0; i < n; ++i) g(i, i) = S(1.0);
    return g;
  });
}

ChartDomain sphere2_domain() {
  ChartDomain d;
  d.dim = 2;
  d.lo = Eigen::Vector2d(0.0, 0.0);
  d.hi = Eigen::Vector2d(M_PI, 2.0 * M_PI);
  d.rule = {CoordRule::PolarCos, CoordRule::Periodic};
  d.sample_lo = Eigen::Vector2d(0.1, 0.0);
  d.sample_hi = Eigen::Vector2d(M_PI - 0.1, 2.0 * M_PI);
  return d;
}

ChartDomain sphere3_domain() {
  ChartDomain d;
  d.dim = 3;
  d.lo = Eigen::Vector3d(0.0, 0.0, 0.0);
  d.hi = Eigen::Vector3d(0.5 * M_PI, 2.0 * M_PI, 2.0 * M_PI);
  d.rule = {CoordRule::PolarCos, CoordRule::Periodic, CoordRule::Periodic};
  d.sample_lo = Eigen::Vector3d(0.05, 0.0, 0.0);
  d.sample_hi = Eigen::Vector3d(0.5 * M_PI - 0.05, 2.0 * M_PI, 2.0 * M_PI);
  return d;
}

ChartDomain torus_domain(const std::vector<double>& periods) {
  ChartDomain d;
  d.dim = static_cast<int>(periods.size());
  d.lo = Eigen::VectorXd::Zero(d.dim);
  d.hi.resize(d.dim);
  for (int i = 0; i < d.dim; ++i) d.hi(i) = periods[static_cast<std::size_t>(i)];
  d.rule.assign(static_cast<std::size_t>(d.dim), CoordRule::Periodic);
  d.sample_lo = d.lo;
  d.sample_hi = d.hi;
  return d;
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials to machine precision") {
  Rule1D r = gauss_legendre(5);
  // Degree 9 is exact for 5 nodes.
  double s9 = 0.0, s8 = 0.0;
  for (int k = 0; k < 5; ++k) {
    s9 += r.weights(k) * std::pow(r.nodes(k), 9);
    s8 += r.weights(k) * std::pow(r.nodes(k), 8);
  }
  CHECK(s9 == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s8 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
  // Weights sum to the interval length.
  CHECK(r.weights.sum() == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("periodic rule is the equispaced trapezoid") {
  Rule1D r = coordinate_rule(CoordRule::Periodic, 0.0, 2.0 * M_PI, 16);
  double s = 0.0;
  for (int k = 0; k < 16; ++k) s += r.weights(k) * std::pow(std::sin(r.nodes(k)), 2);
  CHECK(s == doctest::Approx(M_PI).epsilon(1e-13));
}

TEST_CASE("polar rule absorbs the sine weight at the poles") {
  // integral over [0, pi] of f(theta) sin(theta), f = cos^2, equals 2/3.
  Rule1D r = coordinate_rule(CoordRule::PolarCos, 0.0, M_PI, 8);
  double s = 0.0;
  for (int k = 0; k < 8; ++k)
    s += r.weights(k) * std::pow(std::cos(r.nodes(k)), 2) * std::sin(r.nodes(k));
  CHECK(s == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // Nodes increase and stay interior.
  for (int k = 0; k + 1 < 8; ++k) CHECK(r.nodes(k) < r.nodes(k + 1));
  CHECK(r.nodes(0) > 0.0);
  CHECK(r.nodes(7) < M_PI);
}

TEST_CASE("volumes of round spheres and tori") {
  const double r2 = 1.7, r3 = 1.2;
  QuadratureGrid gs2 = build_grid(sphere2_domain(), round2(r2), 24);
  CHECK(volume(gs2) == doctest::Approx(4.0 * M_PI * r2 * r2).epsilon(1e-10));

  QuadratureGrid gs3 = build_grid(sphere3_domain(), round3(r3), 24);
  CHECK(volume(gs3) == doctest::Approx(2.0 * M_PI * M_PI * r3 * r3 * r3).epsilon(1e-10));

  QuadratureGrid gt = build_grid(torus_domain({2.0 * M_PI, 4.0 * M_PI}), flat(2), 12);
  CHECK(volume(gt) == doctest::Approx(8.0 * M_PI * M_PI).epsilon(1e-12));
}

TEST_CASE("odd integrand on the sphere cancels") {
  QuadratureGrid g = build_grid(sphere2_domain(), round2(1.0), 32);
  ScalarField f([](const auto& p) {
    using std::cos;
    return cos(p(0));
  });
  CHECK(std::abs(integrate(g, f)) < 1e-10);
}

TEST_CASE("volume error contracts under refinement") {
  // Gauss-Legendre coordinate: algebraic integrand with known value.
  ChartDomain d;
  d.dim = 1;
  d.lo = Eigen::VectorXd::Constant(1, 0.0);
  d.hi = Eigen::VectorXd::Constant(1, 1.0);
  d.rule = {CoordRule::GaussLegendre};
  d.sample_lo = d.lo;
  d.sample_hi = d.hi;
  // Metric (1+x)^{-2} dx^2: sqrt(det) = 1/(1+x), length log 2.
  MetricField m([](const auto& q) {
    using S = std::decay_t<decltype(q(0))>;
    MatS<S> g(1, 1);
    S u = 1.0 + q(0);
    g(0, 0) = 1.0 / (u * u);
    return g;
  });
  const double exact = std::log(2.0);
  const double e4 = std::abs(volume(build_grid(d, m, 4)) - exact);
  const double e8 = std::abs(volume(build_grid(d, m, 8)) - exact);
  CHECK(e8 <= e4 / 4.0 + 1e-12);
}

TEST_CASE("divergence-free rotation field on the flat torus") {
  QuadratureGrid g = build_grid(torus_domain({2.0 * M_PI, 2.0 * M_PI}), flat(2), 16);
  VectorField x([](const auto& p) {
    using S = std::decay_t<decltype(p(0))>;
    using std::cos;
    using std::sin;
    VecS<S> v(2);
    v(0) = sin(p(1));
    v(1) = cos(p(0));
    return v;
  });
  auto res = divergence_theorem_residuals(g, {x});
  CHECK(res[0] < 1e-12);
}

TEST_CASE("gradient field on the unit sphere integrates to zero divergence") {
  QuadratureGrid g = build_grid(sphere2_domain(), round2(1.0), 128);
  // grad(cos theta) in chart components: (-sin theta, 0).
  VectorField x([](const auto& p) {
    using S = std::decay_t<decltype(p(0))>;
    using std::sin;
    VecS<S> v(2);
    v(0) = S(0.0) - sin(p(0));
    v(1) = S(0.0);
    return v;
  });
  auto res = divergence_theorem_residuals(g, {x});
  CHECK(res[0] < 1e-5);
}

TEST_CASE("random smooth fields on the 3-sphere obey the divergence theorem") {
  QuadratureGrid g32 = build_grid(sphere3_domain(), round3(1.0), 32);
  QuadratureGrid g16 = build_grid(sphere3_domain(), round3(1.0), 16);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::vector<VectorField> fields;
  for (int k = 0; k < 3; ++k) {
    const double a = amp(rng), b = amp(rng), c = amp(rng);
    fields.push_back(VectorField([a, b, c](const auto& p) {
      using S = std::decay_t<decltype(p(0))>;
      using std::cos;
      using std::sin;
      VecS<S> v(3);
      // Trigonometric in the periodic coordinates, vanishing fast enough at
      // the polar caps through the sin*cos factor.
      auto cap = sin(p(0)) * cos(p(0));
      v(0) = a * cap * sin(p(1) + 2.0 * p(2));
      v(1) = b * cos(p(2)) + c * cap;
      v(2) = c * sin(p(1)) * cap;
      return v;
    }));
  }
  auto r32 = divergence_theorem_residuals(g32, fields);
  auto r16 = divergence_theorem_residuals(g16, fields);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    CHECK(r32[k] < 1e-4);
    CHECK(r32[k] <= r16[k] + 1e-12);
  }
}

TEST_CASE("sweep results are bit-identical across thread counts") {
  QuadratureGrid g = build_grid(sphere2_domain(), round2(1.0), 40);
  ScalarField f([](const auto& p) {
    using std::cos;
    using std::sin;
    return sin(3.0 * p(0)) * cos(2.0 * p(1)) + cos(p(0));
  });
  const double s1 = integrate(g, f, 1);
  const double s3 = integrate(g, f, 3);
  const double s8 = integrate(g, f, 8);
  CHECK(s1 == s3);
  CHECK(s1 == s8);
}

TEST_CASE("grid rejects bad inputs") {
  CHECK_THROWS_AS(build_grid(sphere2_domain(), round2(1.0), 1), Error);
  CHECK_THROWS_AS(gauss_legendre(0), Error);
}
