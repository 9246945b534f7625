#include "subcurv/submersion.hpp"

#include <algorithm>
#include <cmath>

#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"

namespace subcurv {

namespace {

template <class S>
Tens3S<S> zeros3(int n) {
  Tens3S<S> r;
  r.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    MatS<S> m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = S(0.0);
    r.push_back(std::move(m));
  }
  return r;
}

template <class S>
Tens3S<S> christoffel_level(const MatS<S>& ginv, const Tens3S<S>& dg) {
  const int n = static_cast<int>(ginv.rows());
  Tens3S<S> gamma = zeros3<S>(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S s(0.0);
        for (int m = 0; m < n; ++m)
          s += ginv(k, m) * (dg[static_cast<std::size_t>(i)](m, j) +
                             dg[static_cast<std::size_t>(j)](m, i) -
                             dg[static_cast<std::size_t>(m)](i, j));
        gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
      }
  return gamma;
}

template <class S>
MatS<S> mat_value(const MatS<Dual<S>>& m) {
  MatS<S> r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).val;
  return r;
}

template <class S>
std::vector<MatS<S>> mat_partials(const MatS<Dual<S>>& m, int n) {
  std::vector<MatS<S>> r;
  r.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    MatS<S> layer(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) layer(i, j) = partial(m(i, j), c);
    r.push_back(std::move(layer));
  }
  return r;
}

Eigen::MatrixXd reshape_jacobian(const Eigen::VectorXd& flat, int nb, int n) {
  if (flat.size() != nb * n)
    throw PreconditionError("jacobian field has wrong size");
  Eigen::MatrixXd j(nb, n);
  for (int a = 0; a < nb; ++a)
    for (int c = 0; c < n; ++c) j(a, c) = flat(a * n + c);
  return j;
}

// Deterministic direction material for the seeded residual checks.
Eigen::VectorXd seeded_box_vector(int n, unsigned seed, int stream) {
  Eigen::VectorXd v(n);
  const int base = (stream % 2 == 0) ? 2 : 3;
  for (int i = 0; i < n; ++i)
    v(i) = 2.0 * radical_inverse(1 + static_cast<long long>(seed) * 64 +
                                     static_cast<long long>(stream) * 8 + i,
                                 base) -
           1.0;
  return v;
}

// A vector with its field derivative, for fields of the form q -> P(q) v0.
struct ExtField {
  Eigen::VectorXd v;
  Eigen::MatrixXd dv;  // (c, l) = d_c of component l
};

Eigen::VectorXd apply3(const Tens3& t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  const int n = static_cast<int>(t.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        acc += t[static_cast<std::size_t>(k)](a, b) * x(a) * y(b);
    out(k) = acc;
  }
  return out;
}

}  // namespace

void SubmersionSpec::validate() const {
  total_domain.validate();
  base_domain.validate();
  const int n = total_dim();
  const int nb = base_dim();
  if (nb < 1 || nb >= n)
    throw PreconditionError("submersion needs 1 <= base dim < total dim");
  if (total_metric.empty() || base_metric.empty() || projection.empty() ||
      jacobian.empty())
    throw PreconditionError("submersion spec missing a required field");
  if (!fibre_coords.empty()) {
    if (static_cast<int>(fibre_coords.size()) != fibre_dim())
      throw PreconditionError("fibre coordinate count must match fibre dimension");
    for (int c : fibre_coords)
      if (c < 0 || c >= n) throw PreconditionError("fibre coordinate out of range");
    if (!fibre_chart)
      throw PreconditionError("fibre coordinates given without a chart builder");
  } else if (fibre_chart) {
    throw PreconditionError("fibre chart builder given without fibre coordinates");
  }

  const Eigen::MatrixXd pts = halton_points(total_domain, 5, 0);
  for (int k = 0; k < pts.cols(); ++k) {
    const Eigen::VectorXd p = pts.col(k);
    const VecS<D1> pr = projection(seed1(p));
    if (pr.size() != nb)
      throw PreconditionError("projection output dimension mismatch");
    const Eigen::VectorXd flat = jacobian(p);
    const Eigen::MatrixXd j = reshape_jacobian(flat, nb, n);
    double err = 0.0;
    for (int a = 0; a < nb; ++a) {
      const Eigen::VectorXd row = gradient_of(pr(a), n);
      for (int c = 0; c < n; ++c) err = std::max(err, std::abs(row(c) - j(a, c)));
    }
    if (err > 1e-8)
      throw PreconditionError(
          "jacobian field disagrees with the projection differential");
    if (null_space(j).cols() != n - nb)
      throw NotASubmersionError("projection differential drops rank");
  }
}

SplitFrame split_frame(const SubmersionSpec& spec, const Eigen::VectorXd& p) {
  const int n = spec.total_dim();
  const int nb = spec.base_dim();
  const Eigen::MatrixXd G = spec.total_metric(p);
  const Eigen::MatrixXd J = reshape_jacobian(spec.jacobian(p), nb, n);

  const Eigen::MatrixXd kernel = null_space(J);
  if (kernel.cols() != n - nb)
    throw NotASubmersionError("projection differential drops rank");
  Frame vertical = gram_schmidt(kernel, G);

  // metric-dual rows of the differential span the orthogonal complement
  const Eigen::MatrixXd lifts = solve_linear<double>(G, J.transpose());
  Frame horizontal = gram_schmidt(lifts, G);
  return SplitFrame{p, vertical, horizontal};
}

double conformal_check(const SubmersionSpec& spec, const Eigen::MatrixXd& points) {
  const int n = spec.total_dim();
  const int nb = spec.base_dim();
  const bool has_f = !spec.conformal_factor.empty();
  double worst = 0.0;
  for (int k = 0; k < points.cols(); ++k) {
    const Eigen::VectorXd p = points.col(k);
    const Eigen::MatrixXd G = spec.total_metric(p);
    const Eigen::MatrixXd J = reshape_jacobian(spec.jacobian(p), nb, n);
    const Eigen::MatrixXd W = solve_linear<double>(G, J.transpose());
    const Eigen::VectorXd y = spec.projection(p);
    const Eigen::MatrixXd GB = spec.base_metric(y);

    const Eigen::MatrixXd D = J * W;                    // rows map to base
    const Eigen::MatrixXd pulled = D.transpose() * GB * D;
    const Eigen::MatrixXd horiz = W.transpose() * G * W;
    const double scale = has_f ? std::exp(-2.0 * spec.conformal_factor(p)) : 1.0;
    const double defect = (scale * horiz - pulled).cwiseAbs().maxCoeff();
    const double ref = std::max(1.0, pulled.cwiseAbs().maxCoeff());
    worst = std::max(worst, defect / ref);
  }
  return worst;
}

SubPoint sub_point(const SubmersionSpec& spec, const Eigen::VectorXd& p) {
  const int n = spec.total_dim();
  const int nb = spec.base_dim();
  const bool has_f = !spec.conformal_factor.empty();

  SubPoint sp;
  sp.point = p;
  sp.n = n;
  sp.nb = nb;
  sp.nf = n - nb;

  // Raw fields two derivative levels deep; every later quantity is an
  // arithmetic consequence, so one extraction step yields its derivative.
  const VecS<D2> q2 = seed2(p);
  const MatS<D2> G2 = spec.total_metric(q2);
  D2 f2(0.0);
  if (has_f) f2 = spec.conformal_factor(q2);

  const VecS<D2> jflat2 = spec.jacobian(q2);
  if (jflat2.size() != nb * n)
    throw PreconditionError("jacobian field has wrong size");
  MatS<D2> J2(nb, n);
  for (int a = 0; a < nb; ++a)
    for (int c = 0; c < n; ++c) J2(a, c) = jflat2(a * n + c);

  const MatS<D2> Ginv2 = inverse_of(G2);
  const MatS<D2> W2 = matmul(Ginv2, transpose_of(J2));  // n x nb
  const MatS<D2> S2 = matmul(J2, W2);
  const MatS<D2> L2 = matmul(W2, inverse_of(S2));       // basic lift columns
  const MatS<D2> PH2 = matmul(L2, J2);
  MatS<D2> PV2 = identity_like<D2>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) PV2(i, j) -= PH2(i, j);

  MatS<D2> Gaux2 = G2;
  if (has_f) {
    const D2 w = exp(-2.0 * f2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Gaux2(i, j) = G2(i, j) * w;
  }

  // one level down: values are first-derivative quantities
  const MatS<D1> G1 = mat_value(G2);
  const std::vector<MatS<D1>> dG1 = mat_partials(G2, n);
  const MatS<D1> Ginv1 = mat_value(Ginv2);
  const MatS<D1> Gaux1 = mat_value(Gaux2);
  const std::vector<MatS<D1>> dGaux1 = mat_partials(Gaux2, n);
  const MatS<D1> J1 = mat_value(J2);
  const std::vector<MatS<D1>> dJ1 = mat_partials(J2, n);
  const MatS<D1> PH1 = mat_value(PH2);
  const MatS<D1> PV1 = mat_value(PV2);
  const std::vector<MatS<D1>> dPH1 = mat_partials(PH2, n);
  const std::vector<MatS<D1>> dPV1 = mat_partials(PV2, n);
  const MatS<D1> L1 = mat_value(L2);
  const std::vector<MatS<D1>> dL1 = mat_partials(L2, n);

  MatS<D1> Gauxinv1 = Ginv1;
  if (has_f) {
    const D1 w = exp(2.0 * value_part(f2));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Gauxinv1(i, j) = Ginv1(i, j) * w;
  }
  const Tens3S<D1> gamma_aux1 =
      has_f ? christoffel_level(Gauxinv1, dGaux1) : christoffel_level(Ginv1, dG1);

  // fundamental tensors of the rescaled metric, first-derivative level
  Tens3S<D1> T1 = zeros3<D1>(n);
  Tens3S<D1> A1 = zeros3<D1>(n);
  for (int c = 0; c < n; ++c) {
    // covariant c-derivatives of the projected coordinate fields
    MatS<D1> covPV(n, n), covPH(n, n);
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < n; ++b) {
        D1 accv = dPV1[static_cast<std::size_t>(c)](l, b);
        D1 acch = dPH1[static_cast<std::size_t>(c)](l, b);
        for (int m = 0; m < n; ++m) {
          accv += gamma_aux1[static_cast<std::size_t>(l)](c, m) * PV1(m, b);
          acch += gamma_aux1[static_cast<std::size_t>(l)](c, m) * PH1(m, b);
        }
        covPV(l, b) = accv;
        covPH(l, b) = acch;
      }
    // opposite-projection parts: the shared bracket of both tensors
    MatS<D1> bracket = matmul(PH1, covPV);
    const MatS<D1> other = matmul(PV1, covPH);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) bracket(i, j) += other(i, j);
    for (int k = 0; k < n; ++k)
      for (int aa = 0; aa < n; ++aa)
        for (int b = 0; b < n; ++b) {
          T1[static_cast<std::size_t>(k)](aa, b) += PV1(c, aa) * bracket(k, b);
          A1[static_cast<std::size_t>(k)](aa, b) += PH1(c, aa) * bracket(k, b);
        }
  }

  // vertical trace through the vertical block of the inverse metric
  const MatS<D1> Vup1 = matmul(matmul(PV1, Ginv1), transpose_of(PV1));
  VecS<D1> N1(n);
  for (int k = 0; k < n; ++k) {
    D1 acc(0.0);
    for (int aa = 0; aa < n; ++aa)
      for (int b = 0; b < n; ++b)
        acc += T1[static_cast<std::size_t>(k)](aa, b) * Vup1(aa, b);
    N1(k) = acc;
  }

  // extraction to plain values and coordinate derivatives
  sp.G = mat_value(G1);
  sp.Ginv = mat_value(Ginv1);
  sp.dG.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    sp.dG[static_cast<std::size_t>(c)] = mat_value(dG1[static_cast<std::size_t>(c)]);
  sp.gamma = christoffel(sp.Ginv, sp.dG);

  sp.f = value_of(f2);
  sp.df = gradient_of(f2, n);
  sp.d2f = hessian_of(f2, n);

  sp.Gaux = mat_value(Gaux1);
  sp.Gauxinv = mat_value(Gauxinv1);
  sp.gamma_aux.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    sp.gamma_aux[static_cast<std::size_t>(k)] =
        mat_value(gamma_aux1[static_cast<std::size_t>(k)]);

  sp.J = mat_value(J1);
  sp.dJ.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    sp.dJ[static_cast<std::size_t>(c)] = mat_value(dJ1[static_cast<std::size_t>(c)]);
  sp.PH = mat_value(PH1);
  sp.PV = mat_value(PV1);
  sp.dPH.resize(static_cast<std::size_t>(n));
  sp.dPV.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    sp.dPH[static_cast<std::size_t>(c)] = mat_value(dPH1[static_cast<std::size_t>(c)]);
    sp.dPV[static_cast<std::size_t>(c)] = mat_value(dPV1[static_cast<std::size_t>(c)]);
  }

  sp.t.resize(static_cast<std::size_t>(n));
  sp.a.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    sp.t[static_cast<std::size_t>(k)] = mat_value(T1[static_cast<std::size_t>(k)]);
    sp.a[static_cast<std::size_t>(k)] = mat_value(A1[static_cast<std::size_t>(k)]);
  }
  sp.dt.assign(static_cast<std::size_t>(n), Tens3());
  sp.da.assign(static_cast<std::size_t>(n), Tens3());
  for (int c = 0; c < n; ++c) {
    Tens3 tl(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    Tens3 al(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    for (int k = 0; k < n; ++k)
      for (int aa = 0; aa < n; ++aa)
        for (int b = 0; b < n; ++b) {
          tl[static_cast<std::size_t>(k)](aa, b) =
              partial(T1[static_cast<std::size_t>(k)](aa, b), c);
          al[static_cast<std::size_t>(k)](aa, b) =
              partial(A1[static_cast<std::size_t>(k)](aa, b), c);
        }
    sp.dt[static_cast<std::size_t>(c)] = std::move(tl);
    sp.da[static_cast<std::size_t>(c)] = std::move(al);
  }

  sp.nvec = Eigen::VectorXd(n);
  sp.dnvec = Eigen::MatrixXd(n, n);
  for (int k = 0; k < n; ++k) {
    sp.nvec(k) = value_of(N1(k));
    for (int c = 0; c < n; ++c) sp.dnvec(c, k) = partial(N1(k), c);
  }

  sp.basic_lift = mat_value(L1);
  sp.dbasic_lift.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    sp.dbasic_lift[static_cast<std::size_t>(c)] =
        mat_value(dL1[static_cast<std::size_t>(c)]);

  return sp;
}

FundamentalTensors fundamental_tensors(const SubmersionSpec& spec,
                                       const Eigen::VectorXd& p) {
  const SubPoint sp = sub_point(spec, p);
  FundamentalTensors ft;
  ft.frame = split_frame(spec, p);
  const int nf = ft.frame.vertical.count();
  const int nh = ft.frame.horizontal.count();
  const int n = sp.n;

  ft.t_vv.assign(static_cast<std::size_t>(nf),
                 std::vector<Eigen::VectorXd>(static_cast<std::size_t>(nf)));
  ft.t_vh.assign(static_cast<std::size_t>(nf),
                 std::vector<Eigen::VectorXd>(static_cast<std::size_t>(nh)));
  ft.a_hh.assign(static_cast<std::size_t>(nh),
                 std::vector<Eigen::VectorXd>(static_cast<std::size_t>(nh)));
  ft.a_hv.assign(static_cast<std::size_t>(nh),
                 std::vector<Eigen::VectorXd>(static_cast<std::size_t>(nf)));
  for (int j = 0; j < nf; ++j) {
    for (int k = 0; k < nf; ++k)
      ft.t_vv[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
          apply3(sp.t, ft.frame.vertical.vector(j), ft.frame.vertical.vector(k));
    for (int i = 0; i < nh; ++i)
      ft.t_vh[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          apply3(sp.t, ft.frame.vertical.vector(j), ft.frame.horizontal.vector(i));
  }
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < nh; ++j)
      ft.a_hh[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          apply3(sp.a, ft.frame.horizontal.vector(i), ft.frame.horizontal.vector(j));
    for (int k = 0; k < nf; ++k)
      ft.a_hv[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          apply3(sp.a, ft.frame.horizontal.vector(i), ft.frame.vertical.vector(k));
  }
  ft.nvec = sp.nvec;

  // frame-free norms through the block-restricted inverse metric
  const Eigen::MatrixXd Vup = sp.PV * sp.Ginv * sp.PV.transpose();
  const Eigen::MatrixXd Hup = sp.PH * sp.Ginv * sp.PH.transpose();
  double t2 = 0.0, a2 = 0.0;
  for (int aa = 0; aa < n; ++aa)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const double wv = Vup(aa, c) * Vup(b, d);
          const double wh = Hup(aa, c) * Hup(b, d);
          if (wv == 0.0 && wh == 0.0) continue;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              const double gkl = sp.G(k, l);
              t2 += sp.t[static_cast<std::size_t>(k)](aa, b) *
                    sp.t[static_cast<std::size_t>(l)](c, d) * gkl * wv;
              a2 += sp.a[static_cast<std::size_t>(k)](aa, b) *
                    sp.a[static_cast<std::size_t>(l)](c, d) * gkl * wh;
            }
        }
  ft.normT2 = t2;
  ft.normA2 = a2;
  ft.normN2 = inner<double>(sp.nvec, sp.G, sp.nvec);
  return ft;
}

std::vector<Tens3> covariant_12(const Tens3& t, const std::vector<Tens3>& dt,
                                const Tens3& gamma) {
  const int n = static_cast<int>(t.size());
  std::vector<Tens3> out(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    Tens3 layer(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double acc = dt[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)](a, b);
          for (int m = 0; m < n; ++m) {
            acc += gamma[static_cast<std::size_t>(k)](c, m) *
                   t[static_cast<std::size_t>(m)](a, b);
            acc -= gamma[static_cast<std::size_t>(m)](c, a) *
                   t[static_cast<std::size_t>(k)](m, b);
            acc -= gamma[static_cast<std::size_t>(m)](c, b) *
                   t[static_cast<std::size_t>(k)](a, m);
          }
          layer[static_cast<std::size_t>(k)](a, b) = acc;
        }
    out[static_cast<std::size_t>(c)] = std::move(layer);
  }
  return out;
}

Eigen::MatrixXd covariant_vec(const Eigen::VectorXd& v, const Eigen::MatrixXd& dv,
                              const Tens3& gamma) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd out(n, n);
  for (int c = 0; c < n; ++c)
    for (int k = 0; k < n; ++k) {
      double acc = dv(c, k);
      for (int m = 0; m < n; ++m)
        acc += gamma[static_cast<std::size_t>(k)](c, m) * v(m);
      out(c, k) = acc;
    }
  return out;
}

double divergence_vec(const Eigen::VectorXd& v, const Eigen::MatrixXd& dv,
                      const Tens3& gamma) {
  const Eigen::MatrixXd cov = covariant_vec(v, dv, gamma);
  double acc = 0.0;
  for (int c = 0; c < cov.rows(); ++c) acc += cov(c, c);
  return acc;
}

StructuralResiduals structural_residuals(const SubmersionSpec& spec,
                                         const Eigen::VectorXd& p, unsigned seed) {
  const SubPoint sp = sub_point(spec, p);
  const int n = sp.n;

  // seeded unit vectors in each distribution, extended by the projectors
  auto project_field = [&](int stream, const Eigen::MatrixXd& P,
                           const Tens3& dP) {
    ExtField e;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXd raw = seeded_box_vector(n, seed, stream + 4 * attempt);
      Eigen::VectorXd val = P * raw;
      const double len2 = inner<double>(val, sp.G, val);
      if (len2 > 1e-8) {
        const double s = 1.0 / std::sqrt(len2);
        raw *= s;
        e.v = val * s;
        e.dv = Eigen::MatrixXd(n, n);
        for (int c = 0; c < n; ++c)
          e.dv.row(c) = (dP[static_cast<std::size_t>(c)] * raw).transpose();
        return e;
      }
    }
    throw PreconditionError("could not seed a direction in the distribution");
  };
  const ExtField U = project_field(0, sp.PV, sp.dPV);
  const ExtField V = project_field(1, sp.PV, sp.dPV);
  const ExtField X = project_field(2, sp.PH, sp.dPH);
  const ExtField Y = project_field(3, sp.PH, sp.dPH);

  auto covdir = [&](const ExtField& dir, const ExtField& w, const Tens3& gam) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) {
        double dterm = w.dv(c, l);
        for (int m = 0; m < n; ++m)
          dterm += gam[static_cast<std::size_t>(l)](c, m) * w.v(m);
        acc += dir.v(c) * dterm;
      }
      out(l) = acc;
    }
    return out;
  };

  const Eigen::VectorXd grad = sp.Ginv * sp.df;
  const Eigen::VectorXd hgrad = sp.PH * grad;
  const Eigen::VectorXd vgrad = sp.PV * grad;
  const double Uf = U.v.dot(sp.df), Vf = V.v.dot(sp.df);
  const double Xf = X.v.dot(sp.df), Yf = Y.v.dot(sp.df);
  const double gUV = inner<double>(U.v, sp.G, V.v);
  const double gXY = inner<double>(X.v, sp.G, Y.v);

  const Eigen::VectorXd dUV = covdir(U, V, sp.gamma);
  const Eigen::VectorXd dUVa = covdir(U, V, sp.gamma_aux);
  const Eigen::VectorXd dXU = covdir(X, U, sp.gamma);
  const Eigen::VectorXd dXUa = covdir(X, U, sp.gamma_aux);
  const Eigen::VectorXd dUX = covdir(U, X, sp.gamma);
  const Eigen::VectorXd dUXa = covdir(U, X, sp.gamma_aux);
  const Eigen::VectorXd dXY = covdir(X, Y, sp.gamma);
  const Eigen::VectorXd dXYa = covdir(X, Y, sp.gamma_aux);

  StructuralResiduals r;
  auto put = [&](int i, const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs) {
    r.line[static_cast<std::size_t>(i)] = (lhs - rhs).cwiseAbs().maxCoeff();
  };
  put(0, sp.PH * dUV, apply3(sp.t, U.v, V.v) - gUV * hgrad);
  put(1, sp.PV * dUV, sp.PV * dUVa + Uf * V.v + Vf * U.v - gUV * vgrad);
  put(2, sp.PH * dXU, apply3(sp.a, X.v, U.v) + Uf * X.v);
  put(3, sp.PV * dXU, sp.PV * dXUa + Xf * U.v);
  put(4, sp.PH * dUX, sp.PH * dUXa + Uf * X.v);
  put(5, sp.PV * dUX, apply3(sp.t, U.v, X.v) + Xf * U.v);
  put(6, sp.PH * dXY, sp.PH * dXYa + Xf * Y.v + Yf * X.v - gXY * hgrad);
  put(7, sp.PV * dXY, apply3(sp.a, X.v, Y.v) - gXY * vgrad);
  r.max_line = *std::max_element(r.line.begin(), r.line.end());
  return r;
}

UmbilicalReport umbilical_check(const SubmersionSpec& spec,
                                const Eigen::MatrixXd& points) {
  UmbilicalReport rep;
  rep.axis = Eigen::VectorXd::Zero(spec.total_dim());
  for (int col = 0; col < points.cols(); ++col) {
    const Eigen::VectorXd p = points.col(col);
    const SubPoint sp = sub_point(spec, p);
    const SplitFrame fr = split_frame(spec, p);
    const int nf = fr.vertical.count();
    if (nf == 0) continue;

    const Eigen::VectorXd hgrad = sp.PH * (sp.Ginv * sp.df);
    // second fundamental form of the fibre in the unscaled metric
    std::vector<std::vector<Eigen::VectorXd>> m(
        static_cast<std::size_t>(nf),
        std::vector<Eigen::VectorXd>(static_cast<std::size_t>(nf)));
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(sp.n);
    for (int j = 0; j < nf; ++j)
      for (int k = 0; k < nf; ++k) {
        const Eigen::VectorXd uj = fr.vertical.vector(j);
        const Eigen::VectorXd uk = fr.vertical.vector(k);
        const double gjk = inner<double>(uj, sp.G, uk);
        m[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            apply3(sp.t, uj, uk) - gjk * hgrad;
        if (j == k) mean += m[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      }
    mean /= static_cast<double>(nf);

    double res2 = 0.0;
    for (int j = 0; j < nf; ++j)
      for (int k = 0; k < nf; ++k) {
        Eigen::VectorXd d = m[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        if (j == k) d -= mean;
        res2 += inner<double>(d, sp.G, d);
      }
    const double res = std::sqrt(res2);
    if (res >= rep.max_residual) {
      rep.max_residual = res;
      rep.axis = mean;
    }
  }
  return rep;
}

}  // namespace subcurv
