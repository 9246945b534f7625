#include "subcurv/identities.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"

namespace subcurv {

namespace {

// ------------------------------------------------------------ small algebra

double dot2(const Eigen::VectorXd& u, const Eigen::MatrixXd& g,
            const Eigen::VectorXd& v) {
  return u.dot(g * v);
}

Eigen::VectorXd apply3(const Tens3& t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  const int n = static_cast<int>(t.size());
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out(k) = x.dot(t[static_cast<std::size_t>(k)] * y);
  return out;
}

double riem4(const TensorValue& r, const Eigen::VectorXd& a,
             const Eigen::VectorXd& b, const Eigen::VectorXd& c,
             const Eigen::VectorXd& d) {
  const int n = r.dim();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (a(i) == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (b(j) == 0.0) continue;
      const double ab = a(i) * b(j);
      for (int k = 0; k < n; ++k) {
        if (c(k) == 0.0) continue;
        const double abc = ab * c(k);
        for (int l = 0; l < n; ++l) acc += abc * d(l) * r(i, j, k, l);
      }
    }
  }
  return acc;
}

double bil(const SymBilinear& b, const Eigen::VectorXd& u,
           const Eigen::VectorXd& v) {
  return u.dot(b.matrix() * v);
}

// normalized sectional curvature from a stored curvature tensor
double sec_of(const TensorValue& r, const Eigen::MatrixXd& g,
              const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double gram =
      dot2(x, g, x) * dot2(y, g, y) - dot2(x, g, y) * dot2(x, g, y);
  if (!(std::abs(gram) > 1e-12)) throw DegeneratePlaneError("sectional plane");
  return riem4(r, x, y, x, y) / gram;
}

// --------------------------------------------------------- per-point bundle

struct IdPoint {
  const SubmersionSpec* spec = nullptr;
  SubPoint sp;
  SplitFrame fr;
  std::vector<Eigen::VectorXd> hvecs, vvecs;  // frame columns
  CurvatureBundle tot;
  CurvatureBundle base;
  bool fib_ok = false;
  CurvatureBundle fib;
  std::vector<int> fcoords;

  std::vector<Tens3> covT, covA;  // [c], gauge-resolved
  Eigen::MatrixXd covN;           // (c, k), gauge-resolved
  Tens3 gauge_gamma;              // connection behind the three above

  Eigen::MatrixXd hessf;
  Eigen::VectorXd gradf, hgrad, vgrad;
  double gf2 = 0, hgf2 = 0, vgf2 = 0;
  double lapf = 0, hlapf = 0, vlapf = 0;
  double div_hgrad = 0, div_vgrad = 0;
  double divN = 0;
  double normT2 = 0, normA2 = 0, normN2 = 0;
};

Eigen::VectorXd vhat(const IdPoint& ip, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(static_cast<int>(ip.fcoords.size()));
  for (std::size_t a = 0; a < ip.fcoords.size(); ++a)
    out(static_cast<int>(a)) = u(ip.fcoords[a]);
  return out;
}

Eigen::VectorXd push(const IdPoint& ip, const Eigen::VectorXd& x) {
  return ip.sp.J * x;
}

IdPoint build_id_point(const SubmersionSpec& spec, const MetricField& base_metric,
                       const Eigen::VectorXd& p,
                       TensorDerivativeConnection conn) {
  IdPoint ip;
  ip.spec = &spec;
  ip.sp = sub_point(spec, p);
  ip.fr = split_frame(spec, p);
  for (int k = 0; k < ip.fr.horizontal.count(); ++k)
    ip.hvecs.push_back(ip.fr.horizontal.vector(k));
  for (int k = 0; k < ip.fr.vertical.count(); ++k)
    ip.vvecs.push_back(ip.fr.vertical.vector(k));
  ip.tot = curvature_bundle(spec.total_metric, p);

  Eigen::VectorXd pb(ip.sp.nb);
  {
    const Eigen::VectorXd full = spec.projection(p);
    pb = full;
  }
  ip.base = curvature_bundle(base_metric, pb);

  const SubPoint& sp = ip.sp;
  if (sp.nf >= 2) {
    if (!spec.fibre_chart)
      throw PreconditionError(
          "fibre curvature needed but the spec exposes no fibre chart");
    const FibreChart fc = spec.fibre_chart(p);
    ip.fib = curvature_bundle(fc.metric, fc.point);
    ip.fcoords = spec.fibre_coords;
    ip.fib_ok = true;
    // the vertical frame must look like the chart's coordinate directions
    for (const auto& u : ip.vvecs) {
      Eigen::VectorXd masked = u;
      for (int c : ip.fcoords) masked(c) = 0.0;
      if (masked.cwiseAbs().maxCoeff() > 1e-8)
        throw PreconditionError(
            "vertical frame does not align with the fibre chart coordinates");
    }
    for (const auto& u : ip.vvecs)
      for (const auto& v : ip.vvecs) {
        const double full = dot2(u, sp.G, v);
        const double restr = dot2(vhat(ip, u), ip.fib.jets.G, vhat(ip, v));
        if (std::abs(full - restr) > 1e-8)
          throw PreconditionError(
              "fibre chart metric disagrees with the induced metric");
      }
  }

  ip.gauge_gamma =
      (conn == TensorDerivativeConnection::rescaled) ? sp.gamma_aux : sp.gamma;
  ip.covT = covariant_12(sp.t, sp.dt, ip.gauge_gamma);
  ip.covA = covariant_12(sp.a, sp.da, ip.gauge_gamma);
  ip.covN = covariant_vec(sp.nvec, sp.dnvec, ip.gauge_gamma);

  const int n = sp.n;
  ip.hessf.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = sp.d2f(i, j);
      for (int k = 0; k < n; ++k) v -= sp.gamma[static_cast<std::size_t>(k)](i, j) * sp.df(k);
      ip.hessf(i, j) = v;
    }
  ip.gradf = sp.Ginv * sp.df;
  ip.hgrad = sp.PH * ip.gradf;
  ip.vgrad = sp.PV * ip.gradf;
  ip.gf2 = dot2(ip.gradf, sp.G, ip.gradf);
  ip.hgf2 = dot2(ip.hgrad, sp.G, ip.hgrad);
  ip.vgf2 = dot2(ip.vgrad, sp.G, ip.vgrad);
  ip.lapf = (sp.Ginv.array() * ip.hessf.array()).sum();
  for (const auto& x : ip.hvecs) ip.hlapf += dot2(x, ip.hessf, x);
  for (const auto& u : ip.vvecs) ip.vlapf += dot2(u, ip.hessf, u);

  // divergences of the projected gradients, all with the total metric
  std::vector<Eigen::MatrixXd> dGinv(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    dGinv[static_cast<std::size_t>(c)] =
        -sp.Ginv * sp.dG[static_cast<std::size_t>(c)] * sp.Ginv;
  auto div_projected = [&](const Eigen::MatrixXd& P, const Tens3& dP) {
    const Eigen::VectorXd w = P * sp.Ginv * sp.df;
    Eigen::MatrixXd dw(n, n);  // (c, k)
    for (int c = 0; c < n; ++c) {
      const Eigen::VectorXd col =
          dP[static_cast<std::size_t>(c)] * sp.Ginv * sp.df +
          P * dGinv[static_cast<std::size_t>(c)] * sp.df +
          P * sp.Ginv * sp.d2f.col(c);
      dw.row(c) = col.transpose();
    }
    return divergence_vec(w, dw, sp.gamma);
  };
  ip.div_hgrad = div_projected(sp.PH, sp.dPH);
  ip.div_vgrad = div_projected(sp.PV, sp.dPV);
  ip.divN = divergence_vec(sp.nvec, sp.dnvec, sp.gamma);

  for (const auto& u : ip.vvecs)
    for (const auto& v : ip.vvecs)
      ip.normT2 += apply3(sp.t, u, v).dot(sp.G * apply3(sp.t, u, v));
  for (const auto& x : ip.hvecs)
    for (const auto& y : ip.hvecs)
      ip.normA2 += apply3(sp.a, x, y).dot(sp.G * apply3(sp.a, x, y));
  ip.normN2 = dot2(sp.nvec, sp.G, sp.nvec);
  return ip;
}

// ------------------------------------------------------- derived operators

double g2(const IdPoint& ip, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return dot2(u, ip.sp.G, v);
}

Eigen::VectorXd Tv(const IdPoint& ip, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& v) {
  return apply3(ip.sp.t, u, v);
}

Eigen::VectorXd Av(const IdPoint& ip, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  return apply3(ip.sp.a, x, y);
}

double Ef(const IdPoint& ip, const Eigen::VectorXd& e) { return ip.sp.df.dot(e); }

double hf2(const IdPoint& ip, const Eigen::VectorXd& e, const Eigen::VectorXd& f) {
  return dot2(e, ip.hessf, f);
}

// (∇_d T)(e, f) under the resolved gauge
Eigen::VectorXd covT_dir(const IdPoint& ip, const Eigen::VectorXd& d,
                         const Eigen::VectorXd& e, const Eigen::VectorXd& f) {
  const int n = ip.sp.n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c)
    if (d(c) != 0.0) out += d(c) * apply3(ip.covT[static_cast<std::size_t>(c)], e, f);
  return out;
}

Eigen::VectorXd covA_dir(const IdPoint& ip, const Eigen::VectorXd& d,
                         const Eigen::VectorXd& e, const Eigen::VectorXd& f) {
  const int n = ip.sp.n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c)
    if (d(c) != 0.0) out += d(c) * apply3(ip.covA[static_cast<std::size_t>(c)], e, f);
  return out;
}

Eigen::VectorXd covN_dir(const IdPoint& ip, const Eigen::VectorXd& d) {
  return ip.covN.transpose() * d;
}

// (δT)(u, v) = Σ_i g((∇_{X_i} T)(u, v), X_i)
double deltaT(const IdPoint& ip, const Eigen::VectorXd& u,
              const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (const auto& x : ip.hvecs)
    acc += g2(ip, covT_dir(ip, x, u, v), x);
  return acc;
}

Eigen::VectorXd check_deltaT(const IdPoint& ip, const Eigen::VectorXd& u) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ip.sp.n);
  for (const auto& w : ip.vvecs) out -= covT_dir(ip, w, w, u);
  return out;
}

Eigen::VectorXd hat_deltaA(const IdPoint& ip, const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ip.sp.n);
  for (const auto& y : ip.hvecs) out -= covA_dir(ip, y, y, x);
  return out;
}

double hat_deltaN(const IdPoint& ip) {
  double acc = 0.0;
  for (const auto& u : ip.vvecs) acc -= deltaT(ip, u, u);
  return acc;
}


double gAUAV(const IdPoint& ip, const Eigen::VectorXd& u,
             const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (const auto& x : ip.hvecs)
    acc += g2(ip, Av(ip, x, u), Av(ip, x, v));
  return acc;
}

double gAXAY(const IdPoint& ip, const Eigen::VectorXd& x,
             const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (const auto& u : ip.vvecs)
    acc += g2(ip, Av(ip, x, u), Av(ip, y, u));
  return acc;
}

double gTXTY(const IdPoint& ip, const Eigen::VectorXd& x,
             const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (const auto& u : ip.vvecs)
    acc += g2(ip, Tv(ip, u, x), Tv(ip, u, y));
  return acc;
}

double gTUAX(const IdPoint& ip, const Eigen::VectorXd& u,
             const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (const auto& w : ip.vvecs)
    acc += g2(ip, Tv(ip, u, w), Av(ip, x, w));
  return acc;
}

double ric_tot(const IdPoint& ip, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v) {
  return bil(ip.tot.ricci, u, v);
}

double sec_tot(const IdPoint& ip, const Eigen::VectorXd& e,
               const Eigen::VectorXd& f) {
  return sec_of(ip.tot.riemann, ip.sp.G, e, f);
}

double sec_base(const IdPoint& ip, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y) {
  return sec_of(ip.base.riemann, ip.base.jets.G, push(ip, x), push(ip, y));
}

double ric_base(const IdPoint& ip, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y) {
  return bil(ip.base.ricci, push(ip, x), push(ip, y));
}

double sec_fib(const IdPoint& ip, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v) {
  if (!ip.fib_ok) return 0.0;
  return sec_of(ip.fib.riemann, ip.fib.jets.G, vhat(ip, u), vhat(ip, v));
}

double ric_fib(const IdPoint& ip, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v) {
  if (!ip.fib_ok) return 0.0;
  return bil(ip.fib.ricci, vhat(ip, u), vhat(ip, v));
}

double scalar_fib(const IdPoint& ip) { return ip.fib_ok ? ip.fib.scalar : 0.0; }

// value and coordinate derivative of the field q -> P(q) v0, optionally
// normalized to unit metric length
struct ExtVec {
  Eigen::VectorXd v;
  Eigen::MatrixXd dv;  // (c, k)
};

ExtVec projected_extension(const IdPoint& ip, const Eigen::MatrixXd& P,
                           const Tens3& dP, const Eigen::VectorXd& v0,
                           bool normalize) {
  const SubPoint& sp = ip.sp;
  const int n = sp.n;
  ExtVec e;
  const Eigen::VectorXd w = P * v0;
  Eigen::MatrixXd dw(n, n);
  for (int c = 0; c < n; ++c)
    dw.row(c) = (dP[static_cast<std::size_t>(c)] * v0).transpose();
  if (!normalize) {
    e.v = w;
    e.dv = dw;
    return e;
  }
  const double len = std::sqrt(dot2(w, sp.G, w));
  e.v = w / len;
  e.dv.resize(n, n);
  for (int c = 0; c < n; ++c) {
    const Eigen::VectorXd dwc = dw.row(c).transpose();
    const double dlen =
        (w.dot(sp.dG[static_cast<std::size_t>(c)] * w) + 2.0 * dwc.dot(sp.G * w)) /
        (2.0 * len);
    e.dv.row(c) = (dwc / len - w * (dlen / (len * len))).transpose();
  }
  return e;
}

// ∇_d w for an extension field, with an explicit connection
Eigen::VectorXd cov_ext_dir(const IdPoint& ip, const ExtVec& w,
                            const Eigen::VectorXd& d, const Tens3& gam) {
  const int n = ip.sp.n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    if (d(c) == 0.0) continue;
    out += d(c) * w.dv.row(c).transpose();
    for (int k = 0; k < n; ++k)
      out(k) += d(c) * gam[static_cast<std::size_t>(k)].row(c).dot(w.v);
  }
  return out;
}

// w(w(f)) for an extension field
double second_f(const IdPoint& ip, const ExtVec& w) {
  const int n = ip.sp.n;
  double acc = 0.0;
  for (int c = 0; c < n; ++c) {
    if (w.v(c) == 0.0) continue;
    double dpsi = w.dv.row(c).dot(ip.sp.df);
    dpsi += w.v.dot(ip.sp.d2f.col(c));
    acc += w.v(c) * dpsi;
  }
  return acc;
}

using MagMap = std::map<std::string, double>;

void put(MagMap& m, const std::string& k, double v) {
  auto& s = m[k];
  s = std::max(s, std::abs(v));
}

// ------------------------------------------------------ identity evaluators
// Each returns the max residual over frame tuples at one point and records
// term magnitudes into `mag`.

// vertical sectional vs fibre sectional and fibre shape terms
double eq_sec_vv_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const auto& vs = ip.vvecs;
  for (std::size_t j = 0; j < vs.size(); ++j)
    for (std::size_t k = j + 1; k < vs.size(); ++k) {
      const auto& u = vs[j];
      const auto& v = vs[k];
      const double lhs = sec_tot(ip, u, v);
      const double rhs = sec_fib(ip, u, v) - g2(ip, Tv(ip, v, v), Tv(ip, u, u)) +
                         g2(ip, Tv(ip, u, v), Tv(ip, u, v));
      put(mag, "vv", lhs - rhs);
      put(mag, "vv_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_sec_mixed_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  for (const auto& x : ip.hvecs)
    for (const auto& u : ip.vvecs) {
      const double lhs = sec_tot(ip, x, u);
      const double rhs = g2(ip, covT_dir(ip, x, u, u), x) +
                         g2(ip, Av(ip, x, u), Av(ip, x, u)) -
                         g2(ip, Tv(ip, u, x), Tv(ip, u, x));
      put(mag, "mixed", lhs - rhs);
      put(mag, "mixed_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_sec_hh_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const auto& hs = ip.hvecs;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t k = i + 1; k < hs.size(); ++k) {
      const auto& x = hs[i];
      const auto& y = hs[k];
      const double lhs = sec_tot(ip, x, y);
      const double rhs =
          sec_base(ip, x, y) - 3.0 * g2(ip, Av(ip, x, y), Av(ip, x, y));
      put(mag, "hh", lhs - rhs);
      put(mag, "hh_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_vv_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const auto& vs = ip.vvecs;
  for (std::size_t j = 0; j < vs.size(); ++j)
    for (std::size_t k = j; k < vs.size(); ++k) {
      const auto& u = vs[j];
      const auto& v = vs[k];
      const double lhs = ric_tot(ip, u, v);
      const double rhs = ric_fib(ip, u, v) - g2(ip, ip.sp.nvec, Tv(ip, u, v)) +
                         deltaT(ip, u, v) + gAUAV(ip, u, v);
      put(mag, "vv", lhs - rhs);
      put(mag, "vv_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_mixed_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  for (const auto& x : ip.hvecs)
    for (const auto& u : ip.vvecs) {
      const double lhs = ric_tot(ip, x, u);
      const double rhs = g2(ip, check_deltaT(ip, u), x) +
                         g2(ip, covN_dir(ip, u), x) -
                         g2(ip, hat_deltaA(ip, x), u) - 2.0 * gTUAX(ip, u, x);
      put(mag, "mixed", lhs - rhs);
      put(mag, "mixed_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_hh_riem(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const auto& hs = ip.hvecs;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t k = i; k < hs.size(); ++k) {
      const auto& x = hs[i];
      const auto& y = hs[k];
      const double lhs = ric_tot(ip, x, y);
      const double rhs = ric_base(ip, x, y) - 2.0 * gAXAY(ip, x, y) -
                         gTXTY(ip, x, y) +
                         0.5 * (g2(ip, covN_dir(ip, x), y) +
                                g2(ip, covN_dir(ip, y), x));
      put(mag, "hh", lhs - rhs);
      put(mag, "hh_lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_scalar_riem(const IdPoint& ip, MagMap& mag) {
  const double lhs = ip.tot.scalar;
  const double rhs = ip.base.scalar + scalar_fib(ip) - ip.normA2 - ip.normT2 -
                     ip.normN2 - 2.0 * hat_deltaN(ip);
  put(mag, "scalar_lhs", lhs);
  put(mag, "base_scalar", ip.base.scalar);
  put(mag, "fibre_scalar", scalar_fib(ip));
  return std::abs(lhs - rhs);
}

// full curvature tensor on four vertical slots with conformal terms
double eq_riem_vvvv(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const double hg2 = ip.hgf2;
  const auto& vs = ip.vvecs;
  for (std::size_t j = 0; j < vs.size(); ++j)
    for (std::size_t k = j + 1; k < vs.size(); ++k)
      for (std::size_t l = 0; l < vs.size(); ++l)
        for (std::size_t m = l + 1; m < vs.size(); ++m) {
          const auto& u = vs[j];
          const auto& v = vs[k];
          const auto& w = vs[l];
          const auto& wp = vs[m];
          const double lhs = riem4(ip.tot.riemann, u, v, w, wp);
          double rhs = ip.fib_ok ? riem4(ip.fib.riemann, vhat(ip, u), vhat(ip, v),
                                         vhat(ip, w), vhat(ip, wp))
                                 : 0.0;
          rhs += -g2(ip, Tv(ip, v, wp), Tv(ip, u, w)) +
                 g2(ip, Tv(ip, v, w), Tv(ip, u, wp));
          rhs += Ef(ip, Tv(ip, u, w)) * g2(ip, v, wp) -
                 Ef(ip, Tv(ip, v, w)) * g2(ip, u, wp);
          rhs += g2(ip, u, w) * Ef(ip, Tv(ip, v, wp)) -
                 g2(ip, v, w) * Ef(ip, Tv(ip, u, wp));
          rhs += (g2(ip, u, wp) * g2(ip, v, w) - g2(ip, u, w) * g2(ip, v, wp)) *
                 hg2;
          put(mag, "residual", lhs - rhs);
          put(mag, "lhs", lhs);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
  return worst;
}

// full curvature tensor on four horizontal slots with conformal terms
double eq_riem_hhhh(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const double e2f = std::exp(2.0 * ip.sp.f);
  const auto& hs = ip.hvecs;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t j = i + 1; j < hs.size(); ++j)
      for (std::size_t k = 0; k < hs.size(); ++k)
        for (std::size_t l = k + 1; l < hs.size(); ++l) {
          const auto& x = hs[i];
          const auto& y = hs[j];
          const auto& z = hs[k];
          const auto& zp = hs[l];
          const double lhs = riem4(ip.tot.riemann, x, y, z, zp);
          double rhs = e2f * riem4(ip.base.riemann, push(ip, x), push(ip, y),
                                   push(ip, z), push(ip, zp));
          rhs += -2.0 * g2(ip, Av(ip, x, y), Av(ip, z, zp)) +
                 g2(ip, Av(ip, y, z), Av(ip, x, zp)) -
                 g2(ip, Av(ip, x, z), Av(ip, y, zp));
          rhs += -(hf2(ip, x, z) + Ef(ip, x) * Ef(ip, z)) * g2(ip, y, zp) +
                 (hf2(ip, y, z) + Ef(ip, y) * Ef(ip, z)) * g2(ip, x, zp);
          rhs += -(hf2(ip, y, zp) + Ef(ip, y) * Ef(ip, zp)) * g2(ip, x, z) +
                 (hf2(ip, x, zp) + Ef(ip, x) * Ef(ip, zp)) * g2(ip, y, z);
          rhs += (g2(ip, x, z) * g2(ip, y, zp) - g2(ip, x, zp) * g2(ip, y, z)) *
                 ip.gf2;
          put(mag, "residual", lhs - rhs);
          put(mag, "lhs", lhs);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
  return worst;
}

double eq_sec_vv_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const auto& vs = ip.vvecs;
  for (std::size_t j = 0; j < vs.size(); ++j)
    for (std::size_t k = j + 1; k < vs.size(); ++k) {
      const auto& u = vs[j];
      const auto& v = vs[k];
      const double lhs = sec_tot(ip, u, v);
      const double rhs = sec_fib(ip, u, v) - g2(ip, Tv(ip, v, v), Tv(ip, u, u)) +
                         g2(ip, Tv(ip, u, v), Tv(ip, u, v)) +
                         Ef(ip, Tv(ip, u, u)) + Ef(ip, Tv(ip, v, v)) - ip.hgf2;
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_sec_mixed_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  for (const auto& x : ip.hvecs)
    for (const auto& u : ip.vvecs) {
      const double lhs = sec_tot(ip, x, u);
      // the second-derivative groups need unit-length extensions
      const ExtVec ex = projected_extension(ip, ip.sp.PH, ip.sp.dPH, x, true);
      const ExtVec eu = projected_extension(ip, ip.sp.PV, ip.sp.dPV, u, true);
      const Eigen::VectorXd nxx = ip.sp.PH * cov_ext_dir(ip, ex, x, ip.sp.gamma);
      const Eigen::VectorXd nuu = ip.sp.PV * cov_ext_dir(ip, eu, u, ip.sp.gamma);
      double rhs = 2.0 * Ef(ip, x) * g2(ip, Tv(ip, u, u), x) +
                   g2(ip, covT_dir(ip, x, u, u), x) +
                   g2(ip, Av(ip, x, u), Av(ip, x, u)) -
                   g2(ip, Tv(ip, u, x), Tv(ip, u, x));
      rhs += Ef(ip, nxx) - Ef(ip, x) * Ef(ip, x) - second_f(ip, ex);
      rhs += Ef(ip, nuu) - Ef(ip, u) * Ef(ip, u) - second_f(ip, eu);
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_sec_hh_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const double e2f = std::exp(-2.0 * ip.sp.f);
  const auto& hs = ip.hvecs;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t k = i + 1; k < hs.size(); ++k) {
      const auto& x = hs[i];
      const auto& y = hs[k];
      const double lhs = sec_tot(ip, x, y);
      const double rhs = e2f * sec_base(ip, x, y) -
                         3.0 * g2(ip, Av(ip, x, y), Av(ip, x, y)) + ip.gf2 -
                         hf2(ip, x, x) - Ef(ip, x) * Ef(ip, x) - hf2(ip, y, y) -
                         Ef(ip, y) * Ef(ip, y);
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_vv_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const SubPoint& sp = ip.sp;
  const double nb = sp.nb, nf = sp.nf;
  const auto& vs = ip.vvecs;
  for (std::size_t j = 0; j < vs.size(); ++j)
    for (std::size_t k = j; k < vs.size(); ++k) {
      const auto& u = vs[j];
      const auto& v = vs[k];
      const double lhs = ric_tot(ip, u, v);
      double rhs = ric_fib(ip, u, v) - g2(ip, sp.nvec, Tv(ip, u, v)) +
                   deltaT(ip, u, v) + gAUAV(ip, u, v);
      rhs += nf * Ef(ip, Tv(ip, u, v)) + g2(ip, u, v) * Ef(ip, sp.nvec);
      rhs += -nf * g2(ip, u, v) * ip.hgf2 - g2(ip, u, v) * ip.hlapf +
             g2(ip, u, v) * nb * ip.vgf2;
      // dim(B) ((V∇_u v)(f) − uv(f) − u(f)v(f)) with a vertical extension,
      // written through the Hessian
      const ExtVec ev = projected_extension(ip, sp.PV, sp.dPV, v, false);
      const Eigen::VectorXd hcov = sp.PH * cov_ext_dir(ip, ev, u, sp.gamma);
      rhs += nb * (-hf2(ip, u, v) - Ef(ip, hcov) - Ef(ip, u) * Ef(ip, v));
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_mixed_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const SubPoint& sp = ip.sp;
  const double nb = sp.nb, nf = sp.nf, n = sp.n;
  for (const auto& x : ip.hvecs)
    for (const auto& u : ip.vvecs) {
      const double lhs = ric_tot(ip, x, u);
      double rhs = g2(ip, check_deltaT(ip, u), x) + g2(ip, covN_dir(ip, u), x) -
                   g2(ip, hat_deltaA(ip, x), u) - 2.0 * gTUAX(ip, u, x);
      rhs += -(nb - 3.0) * Ef(ip, Av(ip, x, u)) -
             (nf - 1.0) * Ef(ip, Tv(ip, u, x));
      rhs += -(n - 2.0) * (hf2(ip, x, u) + Ef(ip, x) * Ef(ip, u));
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_ric_hh_conf(const IdPoint& ip, MagMap& mag) {
  double worst = 0.0;
  const SubPoint& sp = ip.sp;
  const double nf = sp.nf, n = sp.n;
  const auto& hs = ip.hvecs;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t k = i; k < hs.size(); ++k) {
      const auto& x = hs[i];
      const auto& y = hs[k];
      const double lhs = ric_tot(ip, x, y);
      double rhs = ric_base(ip, x, y) - 2.0 * gAXAY(ip, x, y) - gTXTY(ip, x, y) +
                   g2(ip, covN_dir(ip, x), y);
      // Σ_j g(∇_{U_j}(A_X Y), U_j) with basic extensions of x and y
      {
        const Eigen::VectorXd xb = push(ip, x), yb = push(ip, y);
        const Eigen::VectorXd w = apply3(sp.a, sp.basic_lift * xb,
                                         sp.basic_lift * yb);
        Eigen::MatrixXd dwm(sp.n, sp.n);  // (c, k)
        for (int c = 0; c < sp.n; ++c) {
          const Eigen::VectorXd xt = sp.basic_lift * xb;
          const Eigen::VectorXd yt = sp.basic_lift * yb;
          const Eigen::VectorXd dxt =
              sp.dbasic_lift[static_cast<std::size_t>(c)] * xb;
          const Eigen::VectorXd dyt =
              sp.dbasic_lift[static_cast<std::size_t>(c)] * yb;
          Eigen::VectorXd dwc =
              apply3(sp.da[static_cast<std::size_t>(c)], xt, yt);
          dwc += apply3(sp.a, dxt, yt) + apply3(sp.a, xt, dyt);
          dwm.row(c) = dwc.transpose();
        }
        ExtVec we;
        we.v = w;
        we.dv = dwm;
        for (const auto& u : ip.vvecs)
          rhs += g2(ip, cov_ext_dir(ip, we, u, ip.gauge_gamma), u);
      }
      rhs += -(n - 2.0) * (hf2(ip, x, y) + Ef(ip, x) * Ef(ip, y)) -
             nf * Ef(ip, Av(ip, x, y));
      rhs += (n - 2.0) * g2(ip, x, y) * ip.gf2;
      rhs += Ef(ip, x) * g2(ip, sp.nvec, y) + Ef(ip, y) * g2(ip, sp.nvec, x);
      rhs += -g2(ip, x, y) * (Ef(ip, sp.nvec) + ip.lapf);
      put(mag, "residual", lhs - rhs);
      put(mag, "lhs", lhs);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double eq_scalar_conf(const IdPoint& ip, MagMap& mag) {
  const SubPoint& sp = ip.sp;
  const double nb = sp.nb, nf = sp.nf, n = sp.n;
  const double lhs = ip.tot.scalar;
  const double base_pulled = std::exp(-2.0 * sp.f) * ip.base.scalar;
  const double fib_s = scalar_fib(ip);
  const double dhatN = hat_deltaN(ip);
  const double t_grad = nb * (n + nf - 3.0) * ip.gf2;
  const double t_nf = (2.0 - 2.0 * nb + nf) * Ef(ip, sp.nvec);
  const double t_hlap = -(2.0 * nf - 2.0) * ip.hlapf;
  const double t_lap = -2.0 * nb * ip.lapf;
  const double t_hgrad = -(nf - 2.0 + nf * nf) * ip.hgf2;
  const double rhs = base_pulled + fib_s - ip.normA2 - ip.normT2 + ip.divN -
                     dhatN + t_grad + t_nf + t_hlap + t_lap + t_hgrad;
  put(mag, "scalar_total", lhs);
  put(mag, "base_scalar_pulled", base_pulled);
  put(mag, "fibre_scalar", fib_s);
  put(mag, "norm_a_sq", ip.normA2);
  put(mag, "norm_t_sq", ip.normT2);
  put(mag, "div_mean_curvature", ip.divN);
  put(mag, "horizontal_codifferential_n", dhatN);
  put(mag, "grad_f_sq_term", t_grad);
  put(mag, "mean_curvature_f_term", t_nf);
  put(mag, "horizontal_laplacian_term", t_hlap);
  put(mag, "laplacian_term", t_lap);
  put(mag, "horizontal_grad_f_sq_term", t_hgrad);
  put(mag, "residual", lhs - rhs);
  return std::abs(lhs - rhs);
}

// ----------------------------------------------------------- suite drivers

Eigen::MatrixXd sample_points(const SubmersionSpec& spec, int points,
                              unsigned seed) {
  if (points < 1) throw PreconditionError("need at least one sample point");
  return halton_points(spec.total_domain, points, seed);
}

struct LineSpec {
  std::string name;
  double (*eval)(const IdPoint&, MagMap&);
  int needs_vertical = 0;    // minimum fibre dimension
  int needs_horizontal = 0;  // minimum base dimension
};

IdentityReport run_lines(const std::string& id, const SubmersionSpec& spec,
                         const MetricField& base_metric,
                         const Eigen::MatrixXd& pts,
                         TensorDerivativeConnection conn,
                         const std::vector<LineSpec>& lines) {
  IdentityReport rep;
  rep.identity_id = id;
  bool any_line = false;
  for (int c = 0; c < pts.cols(); ++c) {
    const Eigen::VectorXd p = pts.col(c);
    const IdPoint ip = build_id_point(spec, base_metric, p, conn);
    double worst = 0.0;
    for (const auto& line : lines) {
      if (ip.sp.nf < line.needs_vertical || ip.sp.nb < line.needs_horizontal)
        continue;
      any_line = true;
      worst = std::max(worst, line.eval(ip, rep.terms));
    }
    rep.per_point.push_back({p, worst});
    rep.max_residual = std::max(rep.max_residual, worst);
    ++rep.points_checked;
  }
  // an empty quantifier set is a vacuous pass, not a failed precondition
  if (!any_line) rep.terms["vacuous"] = 1.0;
  return rep;
}

}  // namespace

IdentityReport verify_structural(const SubmersionSpec& spec, int points,
                                 unsigned seed) {
  const Eigen::MatrixXd pts = sample_points(spec, points, seed);
  IdentityReport rep;
  rep.identity_id = "EQ2_6";
  for (int c = 0; c < pts.cols(); ++c) {
    const Eigen::VectorXd p = pts.col(c);
    const StructuralResiduals sr = structural_residuals(spec, p, seed);
    for (int l = 0; l < 8; ++l)
      put(rep.terms, "line" + std::to_string(l + 1), sr.line[l]);
    rep.per_point.push_back({p, sr.max_line});
    rep.max_residual = std::max(rep.max_residual, sr.max_line);
    ++rep.points_checked;
  }
  return rep;
}

std::vector<IdentityReport> verify_riemannian_formulas(
    const SubmersionSpec& spec, int points, unsigned seed) {
  const Eigen::MatrixXd pts = sample_points(spec, points, seed);

  double fmin = 0.0, fmax = 0.0;
  if (!spec.conformal_factor.empty()) {
    for (int c = 0; c < pts.cols(); ++c) {
      const double v = spec.conformal_factor(Eigen::VectorXd(pts.col(c)));
      if (c == 0) fmin = fmax = v;
      fmin = std::min(fmin, v);
      fmax = std::max(fmax, v);
    }
  }
  if (fmax - fmin > 1e-12)
    throw PreconditionError(
        "conformal factor varies across the sampled points; these relations "
        "need a constant factor");

  // a constant factor is a homothety of the base: fold it into the metric
  MetricField base_used = spec.base_metric;
  if (fmax != 0.0 || fmin != 0.0) {
    const double scale = std::exp(2.0 * 0.5 * (fmin + fmax));
    const MetricField inner = spec.base_metric;
    base_used = MetricField([inner, scale](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      auto G = inner(q);
      for (int i = 0; i < G.rows(); ++i)
        for (int j = 0; j < G.cols(); ++j) G(i, j) = G(i, j) * S(scale);
      return G;
    });
  }

  std::vector<IdentityReport> out;
  out.push_back(run_lines("EQ2_3", spec, base_used, pts,
                          TensorDerivativeConnection::total,
                          {{"vv", &eq_sec_vv_riem, 2, 0},
                           {"mixed", &eq_sec_mixed_riem, 1, 1},
                           {"hh", &eq_sec_hh_riem, 0, 2}}));
  out.push_back(run_lines("EQ2_4", spec, base_used, pts,
                          TensorDerivativeConnection::total,
                          {{"vv", &eq_ric_vv_riem, 1, 0},
                           {"mixed", &eq_ric_mixed_riem, 1, 1},
                           {"hh", &eq_ric_hh_riem, 0, 1}}));
  out.push_back(run_lines("EQ2_5", spec, base_used, pts,
                          TensorDerivativeConnection::total,
                          {{"scalar", &eq_scalar_riem, 0, 0}}));
  return out;
}

std::vector<IdentityReport> verify_conformal_curvature(
    const SubmersionSpec& spec, int points, unsigned seed,
    TensorDerivativeConnection conn) {
  const Eigen::MatrixXd pts = sample_points(spec, points, seed);
  if (conformal_check(spec, pts) > 1e-9)
    throw PreconditionError(
        "spec fails the conformal compatibility check at the sampled points");

  std::vector<IdentityReport> out;
  const MetricField& bm = spec.base_metric;
  out.push_back(run_lines("EQ2_7", spec, bm, pts, conn,
                          {{"vvvv", &eq_riem_vvvv, 2, 0}}));
  out.push_back(run_lines("EQ2_8", spec, bm, pts, conn,
                          {{"hhhh", &eq_riem_hhhh, 0, 2}}));
  out.push_back(run_lines("EQ2_9", spec, bm, pts, conn,
                          {{"vv", &eq_sec_vv_conf, 2, 0}}));
  out.push_back(run_lines("EQ2_10", spec, bm, pts, conn,
                          {{"mixed", &eq_sec_mixed_conf, 1, 1}}));
  out.push_back(run_lines("EQ2_11", spec, bm, pts, conn,
                          {{"hh", &eq_sec_hh_conf, 0, 2}}));
  out.push_back(run_lines("EQ2_12", spec, bm, pts, conn,
                          {{"vv", &eq_ric_vv_conf, 1, 0}}));
  out.push_back(run_lines("EQ2_13", spec, bm, pts, conn,
                          {{"mixed", &eq_ric_mixed_conf, 1, 1}}));
  out.push_back(run_lines("EQ2_14", spec, bm, pts, conn,
                          {{"hh", &eq_ric_hh_conf, 0, 1}}));
  out.push_back(run_lines("EQ2_15", spec, bm, pts, conn,
                          {{"scalar", &eq_scalar_conf, 0, 0}}));
  return out;
}

std::vector<IdentityReport> verify_lcf_identities(
    const SubmersionSpec& spec, int points, unsigned seed,
    const std::vector<ComponentInfo>& components,
    TensorDerivativeConnection conn) {
  const Eigen::MatrixXd pts = sample_points(spec, points, seed);
  const int n = spec.total_dim();
  const int nb = spec.base_dim();
  const int nf = spec.fibre_dim();

  // Weyl of the total space, for the conformal-flatness precondition;
  // identically zero below dimension 4.
  double weyl_max = 0.0;
  std::vector<IdPoint> ips;
  ips.reserve(static_cast<std::size_t>(pts.cols()));
  for (int c = 0; c < pts.cols(); ++c) {
    ips.push_back(
        build_id_point(spec, spec.base_metric, pts.col(c), conn));
    if (n >= 4)
      weyl_max = std::max(weyl_max, weyl_tensor(ips.back().tot).max_abs());
  }
  const bool weyl_flat = weyl_max < 1e-6;

  auto not_applicable = [&](const std::string& id, const std::string& why) {
    IdentityReport rep;
    rep.identity_id = id;
    rep.applicable = false;
    rep.reason = why;
    rep.terms["weyl_residual"] = weyl_max;
    return rep;
  };

  auto run_scalar = [&](const std::string& id, auto&& relation) {
    IdentityReport rep;
    rep.identity_id = id;
    for (std::size_t c = 0; c < ips.size(); ++c) {
      const double r = relation(ips[c], rep.terms);
      rep.per_point.push_back({ips[c].sp.point, r});
      rep.max_residual = std::max(rep.max_residual, r);
      ++rep.points_checked;
    }
    return rep;
  };

  std::vector<IdentityReport> out;

  // scalar relation on a conformally flat total space with equal-dimension
  // base and fibre
  if (nb != nf) {
    out.push_back(not_applicable("EQ4_1", "base and fibre dimensions differ"));
  } else if (!weyl_flat) {
    out.push_back(not_applicable("EQ4_1", "total space Weyl tensor is not zero"));
  } else {
    out.push_back(run_scalar("EQ4_1", [n](const IdPoint& ip, MagMap& mag) {
      const double lhs = n * ip.tot.scalar / (2.0 * (n - 1.0));
      const double rhs = 2.0 * (ip.normA2 - ip.normT2 - hat_deltaN(ip)) -
                         (n - 4.0) * Ef(ip, ip.sp.nvec) - n * ip.lapf +
                         n * (n - 2.0) / 2.0 * ip.gf2;
      put(mag, "lhs", lhs);
      put(mag, "residual", lhs - rhs);
      return std::abs(lhs - rhs);
    }));
  }

  // the same right-hand side against the component scalar curvatures of a
  // product of conformally flat pieces
  {
    bool ok = !components.empty();
    std::string why = components.empty() ? "no product structure supplied" : "";
    double lhs_sum = 0.0;
    for (const auto& comp : components) {
      if (!comp.lcf) {
        ok = false;
        why = "component '" + comp.name + "' is not conformally flat";
        break;
      }
      if (comp.dim < 4) {
        ok = false;
        why = "component '" + comp.name + "' has dimension below 4";
        break;
      }
      if (comp.h_dim != comp.v_dim) {
        ok = false;
        why = "component '" + comp.name +
              "' splits unevenly between horizontal and vertical";
        break;
      }
      lhs_sum += comp.dim * comp.scalar / (2.0 * (comp.dim - 1.0));
    }
    if (!ok) {
      out.push_back(not_applicable("EQ4_2", why));
    } else {
      out.push_back(
          run_scalar("EQ4_2", [n, lhs_sum](const IdPoint& ip, MagMap& mag) {
            const double rhs = 2.0 * (ip.normA2 - ip.normT2 - hat_deltaN(ip)) -
                               (n - 4.0) * Ef(ip, ip.sp.nvec) - n * ip.lapf +
                               n * (n - 2.0) / 2.0 * ip.gf2;
            put(mag, "lhs", lhs_sum);
            put(mag, "residual", lhs_sum - rhs);
            return std::abs(lhs_sum - rhs);
          }));
    }
  }

  // mixed product total space: conformally flat part plus Einstein factors
  // lying entirely on one side of the splitting
  {
    bool ok = !components.empty() && nb == nf;
    std::string why = components.empty()
                          ? "no product structure supplied"
                          : (nb != nf ? "base and fibre dimensions differ" : "");
    double lhs_sum = 0.0;
    int l_dim = 0, e_dim = 0;
    for (const auto& comp : components) {
      if (!ok) break;
      const bool one_sided = comp.h_dim == 0 || comp.v_dim == 0;
      if (one_sided && comp.einstein) {
        e_dim += comp.dim;
      } else if (comp.lcf && comp.dim >= 4 && comp.h_dim == comp.v_dim) {
        l_dim += comp.dim;
        lhs_sum += comp.dim * comp.scalar / (2.0 * (comp.dim - 1.0));
      } else {
        ok = false;
        why = "component '" + comp.name +
              "' is neither a balanced conformally flat piece nor a one-sided "
              "Einstein piece";
      }
    }
    if (ok && l_dim == 0) {
      ok = false;
      why = "no conformally flat component";
    }
    if (!ok) {
      out.push_back(not_applicable("EQ4_3", why));
    } else {
      out.push_back(run_scalar(
          "EQ4_3", [n, lhs_sum, l_dim, e_dim](const IdPoint& ip, MagMap& mag) {
            const double rhs =
                2.0 * (ip.normA2 - ip.normT2 - hat_deltaN(ip)) -
                (n - 4.0) * Ef(ip, ip.sp.nvec) -
                0.5 * (n + l_dim) * (ip.lapf - (n - 2.0) / 2.0 * ip.gf2) -
                0.5 * e_dim *
                    (ip.div_hgrad - (n - 2.0) / 2.0 * ip.hgf2);
            put(mag, "lhs", lhs_sum);
            put(mag, "residual", lhs_sum - rhs);
            return std::abs(lhs_sum - rhs);
          }));
    }
  }

  // base-plus-fibre scalar relation on a conformally flat total space
  if (nb != nf) {
    out.push_back(not_applicable("EQ4_17", "base and fibre dimensions differ"));
  } else if (!weyl_flat) {
    out.push_back(not_applicable("EQ4_17", "total space Weyl tensor is not zero"));
  } else {
    out.push_back(run_scalar("EQ4_17", [n](const IdPoint& ip, MagMap& mag) {
      const double lhs =
          std::exp(-2.0 * ip.sp.f) * ip.base.scalar + scalar_fib(ip);
      const double rhs =
          (5.0 * n - 4.0) / n * ip.normA2 -
          (3.0 * n - 4.0) / n * (ip.normT2 + hat_deltaN(ip)) - ip.divN -
          (n * n - 12.0 * n + 16.0) / (2.0 * n) * Ef(ip, ip.sp.nvec) -
          (n - 2.0) * ip.div_vgrad +
          (n - 2.0) * (3.0 * n - 4.0) / 4.0 * ip.vgf2;
      put(mag, "lhs", lhs);
      put(mag, "residual", lhs - rhs);
      return std::abs(lhs - rhs);
    }));
  }

  // mixed-curvature double sum for vanishing fibre shape tensor
  {
    double t_max = 0.0;
    for (const auto& ip : ips) t_max = std::max(t_max, std::sqrt(ip.normT2));
    if (t_max * t_max > 1e-10) {
      auto rep = not_applicable("EQ4_20", "fibre shape tensor does not vanish");
      rep.terms["norm_t_sq"] = t_max * t_max;
      out.push_back(rep);
    } else {
      out.push_back(
          run_scalar("EQ4_20", [nb, nf](const IdPoint& ip, MagMap& mag) {
            double rmix = 0.0;
            for (const auto& x : ip.hvecs)
              for (const auto& u : ip.vvecs)
                rmix += sec_tot(ip, x, u);
            const double rhs = ip.normA2 - nf * ip.div_hgrad -
                               nb * ip.div_vgrad +
                               nf * (nf - 1.0) * ip.hgf2 +
                               nb * (nb - 1.0) * ip.vgf2;
            put(mag, "mixed_sum", rmix);
            put(mag, "residual", rmix - rhs);
            return std::abs(rmix - rhs);
          }));
    }
  }

  return out;
}

}  // namespace subcurv
