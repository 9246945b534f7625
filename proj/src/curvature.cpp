#include "subcurv/curvature.hpp"

#include <cmath>

#include "subcurv/errors.hpp"

namespace subcurv {

namespace {

MetricJets jets_from_d2(int n, const MatS<D2>& g2) {
  MetricJets j;
  j.dim = n;
  j.G.resize(n, n);
  j.dG.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
  j.d2G.assign(static_cast<std::size_t>(n),
               Tens3(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const D2& e = g2(a, b);
      j.G(a, b) = value_of(e);
      for (int c = 0; c < n; ++c) {
        D1 pc = partial(e, c);
        j.dG[static_cast<std::size_t>(c)](a, b) = pc.val;
        for (int d = 0; d < n; ++d)
          j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)](a, b) =
              partial(pc, d);
      }
    }
  j.G = 0.5 * (j.G + j.G.transpose()).eval();
  const double det = j.G.determinant();
  if (!(det > 1e-14)) throw SingularMetricError("metric not positive at point");
  j.Ginv = j.G.inverse();
  j.sqrt_det = std::sqrt(det);
  return j;
}

}  // namespace

MetricJets metric_jets(const MetricField& g, const Eigen::VectorXd& q) {
  const int n = static_cast<int>(q.size());
  MatS<D2> g2 = g(seed2(q));
  if (g2.rows() != n || g2.cols() != n)
    throw Error("metric field returned wrong shape");
  return jets_from_d2(n, g2);
}

MetricJets metric_jets_fd(const MetricField& g, const Eigen::VectorXd& q, double h) {
  const int n = static_cast<int>(q.size());
  MetricJets j;
  j.dim = n;
  j.G = g(q);
  j.dG.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
  j.d2G.assign(static_cast<std::size_t>(n),
               Tens3(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n)));

  auto shifted = [&](int c, double s) {
    Eigen::VectorXd p = q;
    p(c) += s;
    return Eigen::MatrixXd(g(p));
  };
  for (int c = 0; c < n; ++c)
    j.dG[static_cast<std::size_t>(c)] = (shifted(c, h) - shifted(c, -h)) / (2.0 * h);
  for (int c = 0; c < n; ++c) {
    j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] =
        (shifted(c, h) - 2.0 * j.G + shifted(c, -h)) / (h * h);
    for (int d = c + 1; d < n; ++d) {
      auto shifted2 = [&](double sc, double sd) {
        Eigen::VectorXd p = q;
        p(c) += sc;
        p(d) += sd;
        return Eigen::MatrixXd(g(p));
      };
      Eigen::MatrixXd m = (shifted2(h, h) - shifted2(h, -h) - shifted2(-h, h) +
                           shifted2(-h, -h)) /
                          (4.0 * h * h);
      j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = m;
      j.d2G[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)] = m;
    }
  }
  const double det = j.G.determinant();
  if (!(det > 1e-14)) throw SingularMetricError("metric not positive at point");
  j.Ginv = j.G.inverse();
  j.sqrt_det = std::sqrt(det);
  return j;
}

Tens3 christoffel(const Eigen::MatrixXd& ginv, const Tens3& dG) {
  const int n = static_cast<int>(ginv.rows());
  Tens3 gamma(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj) {
        double s = 0.0;
        for (int m = 0; m < n; ++m)
          s += ginv(k, m) *
               (dG[static_cast<std::size_t>(i)](m, jj) +
                dG[static_cast<std::size_t>(jj)](m, i) -
                dG[static_cast<std::size_t>(m)](i, jj));
        gamma[static_cast<std::size_t>(k)](i, jj) = 0.5 * s;
      }
  return gamma;
}

Tens3 christoffel_from_jets(const MetricJets& j) { return christoffel(j.Ginv, j.dG); }

std::vector<Tens3> christoffel_derivative_from_jets(const MetricJets& j) {
  const int n = j.dim;
  // d_c G^{km} = -G^{ka} (d_c G_ab) G^{bm}
  Tens3 dGinv(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    dGinv[static_cast<std::size_t>(c)] =
        -j.Ginv * j.dG[static_cast<std::size_t>(c)] * j.Ginv;

  std::vector<Tens3> dgamma(
      static_cast<std::size_t>(n),
      Tens3(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n)));
  for (int c = 0; c < n; ++c)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < n; ++jj) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) {
            s += dGinv[static_cast<std::size_t>(c)](k, m) *
                 (j.dG[static_cast<std::size_t>(i)](m, jj) +
                  j.dG[static_cast<std::size_t>(jj)](m, i) -
                  j.dG[static_cast<std::size_t>(m)](i, jj));
            s += j.Ginv(k, m) *
                 (j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)](m, jj) +
                  j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(jj)](m, i) -
                  j.d2G[static_cast<std::size_t>(c)][static_cast<std::size_t>(m)](i, jj));
          }
          dgamma[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)](i, jj) =
              0.5 * s;
        }
  return dgamma;
}

namespace {

// R^e_bcd = d_c Gamma^e_db - d_d Gamma^e_cb
//           + Gamma^e_cm Gamma^m_db - Gamma^e_dm Gamma^m_cb,
// returned with the first index lowered by the metric.
TensorValue riemann_cov(const MetricJets& j, const Tens3& gamma,
                        const std::vector<Tens3>& dgamma) {
  const int n = j.dim;
  TensorValue cov(n, 4);
  for (int e = 0; e < n; ++e)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double r = dgamma[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)](d, b) -
                     dgamma[static_cast<std::size_t>(d)][static_cast<std::size_t>(e)](c, b);
          for (int m = 0; m < n; ++m)
            r += gamma[static_cast<std::size_t>(e)](c, m) *
                     gamma[static_cast<std::size_t>(m)](d, b) -
                 gamma[static_cast<std::size_t>(e)](d, m) *
                     gamma[static_cast<std::size_t>(m)](c, b);
          for (int a = 0; a < n; ++a) cov(a, b, c, d) += j.G(a, e) * r;
        }
  return cov;
}

}  // namespace

TensorValue riemann_from_jets(const MetricJets& j) {
  return riemann_cov(j, christoffel_from_jets(j),
                     christoffel_derivative_from_jets(j));
}

CurvatureBundle curvature_bundle(const MetricField& g, const Eigen::VectorXd& q) {
  CurvatureBundle b;
  b.point = q;
  b.jets = metric_jets(g, q);
  b.gamma = christoffel_from_jets(b.jets);
  b.dgamma = christoffel_derivative_from_jets(b.jets);

  const int n = b.jets.dim;
  b.riemann = riemann_cov(b.jets, b.gamma, b.dgamma);

  SymBilinear ginv(b.jets.Ginv);
  TensorValue ric = contract(b.riemann, 0, 2, ginv);
  Eigen::MatrixXd ricm(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) ricm(i, k) = ric(i, k);
  b.ricci = SymBilinear(ricm);

  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) s += b.jets.Ginv(i, k) * b.ricci(i, k);
  b.scalar = s;
  return b;
}

namespace {

// Trace-adjusted Schouten-type tensor: P = (Ric - s/(2(n-1)) g) / (n-2).
SymBilinear schouten(const CurvatureBundle& b) {
  const int n = b.jets.dim;
  Eigen::MatrixXd p =
      (b.ricci.matrix() - b.scalar / (2.0 * (n - 1)) * b.jets.G) / (n - 2);
  return SymBilinear(p);
}

}  // namespace

TensorValue weyl_tensor(const CurvatureBundle& b) {
  const int n = b.jets.dim;
  if (n < 4)
    throw UnsupportedDimensionError("trace-free curvature part needs dim >= 4");
  TensorValue w = b.riemann;
  w -= kulkarni_nomizu(schouten(b), SymBilinear(b.jets.G));
  return w;
}

double curvature_split_residual(const CurvatureBundle& b) {
  TensorValue rebuilt = weyl_tensor(b);
  rebuilt += kulkarni_nomizu(schouten(b), SymBilinear(b.jets.G));
  rebuilt -= b.riemann;
  return rebuilt.max_abs();
}

double sectional_curvature(const CurvatureBundle& b, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, double tol) {
  const Eigen::MatrixXd& g = b.jets.G;
  const double xx = x.dot(g * x), yy = y.dot(g * y), xy = x.dot(g * y);
  const double area2 = xx * yy - xy * xy;
  if (!(area2 > tol)) throw DegeneratePlaneError("sectional curvature: degenerate span");
  const Eigen::VectorXd args[4] = {x, y, x, y};
  return tensor_eval(b.riemann, args) / area2;
}

Eigen::VectorXd metric_gradient(const MetricJets& j, const ScalarField& h,
                                const Eigen::VectorXd& q) {
  D1 v = h(seed1(q));
  return j.Ginv * gradient_of(v, j.dim);
}

SymBilinear hessian(const CurvatureBundle& b, const ScalarField& h) {
  const int n = b.jets.dim;
  D2 v = h(seed2(b.point));
  Eigen::VectorXd dh = gradient_of(v, n);
  Eigen::MatrixXd d2h = hessian_of(v, n);
  Eigen::MatrixXd hess(n, n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj) {
      double s = d2h(i, jj);
      for (int k = 0; k < n; ++k)
        s -= b.gamma[static_cast<std::size_t>(k)](i, jj) * dh(k);
      hess(i, jj) = s;
    }
  return SymBilinear(hess);
}

double laplacian(const CurvatureBundle& b, const ScalarField& h) {
  const SymBilinear hs = hessian(b, h);
  double s = 0.0;
  for (int i = 0; i < b.jets.dim; ++i)
    for (int jj = 0; jj < b.jets.dim; ++jj) s += b.jets.Ginv(i, jj) * hs(i, jj);
  return s;
}

double divergence(const CurvatureBundle& b, const VectorField& x) {
  const int n = b.jets.dim;
  VecS<D1> xv = x(seed1(b.point));
  if (xv.size() != n) throw Error("vector field returned wrong dimension");
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += partial(xv(i), i);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      s += b.gamma[static_cast<std::size_t>(i)](i, k) * value_of(xv(k));
  return s;
}

}  // namespace subcurv
