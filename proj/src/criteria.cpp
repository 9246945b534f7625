#include "subcurv/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"
#include "subcurv/quadrature.hpp"
#include "subcurv/submersion.hpp"

namespace subcurv {
namespace {

double dot2(const Eigen::VectorXd& u, const Eigen::MatrixXd& G,
            const Eigen::VectorXd& v) {
  return u.dot(G * v);
}

double gnorm(const Eigen::MatrixXd& G, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, dot2(v, G, v)));
}

// Hess(f)_ij = d_i d_j f - Gamma^k_ij d_k f, from the submersion 2-jet.
Eigen::MatrixXd hess_f(const SubPoint& sp) {
  Eigen::MatrixXd H = sp.d2f;
  for (int i = 0; i < sp.n; ++i)
    for (int j = 0; j < sp.n; ++j)
      for (int k = 0; k < sp.n; ++k)
        H(i, j) -= sp.gamma[static_cast<std::size_t>(k)](i, j) * sp.df(k);
  return H;
}

// div of the projected gradient P grad f, via the product-rule derivative
// of P G^{-1} df.
double div_projected(const SubPoint& sp, bool horizontal) {
  const Eigen::MatrixXd& P = horizontal ? sp.PH : sp.PV;
  const Tens3& dP = horizontal ? sp.dPH : sp.dPV;
  const Eigen::VectorXd w = P * sp.Ginv * sp.df;
  Eigen::MatrixXd dw(sp.n, sp.n);
  for (int c = 0; c < sp.n; ++c) {
    const auto& dGc = sp.dG[static_cast<std::size_t>(c)];
    const Eigen::MatrixXd dGinv = -sp.Ginv * dGc * sp.Ginv;
    const Eigen::VectorXd col = dP[static_cast<std::size_t>(c)] * sp.Ginv * sp.df +
                                P * dGinv * sp.df + P * sp.Ginv * sp.d2f.col(c);
    dw.row(c) = col.transpose();
  }
  return divergence_vec(w, dw, sp.gamma);
}

ScalarField zero_scalar() {
  return ScalarField([](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    (void)q;
    return S(0.0);
  });
}

struct MeanNorms {
  double t2 = 0.0, a2 = 0.0, n2 = 0.0;
  double t2_sd = 0.0, a2_sd = 0.0, n2_sd = 0.0;
};

// Quadrature means and standard deviations of the squared tensor norms over
// the whole model, by a serial tensor-product sweep (deterministic).
MeanNorms norm_means(const SubmersionSpec& spec, int nodes) {
  const ChartDomain& dom = spec.total_domain;
  std::vector<Rule1D> rules;
  rules.reserve(static_cast<std::size_t>(dom.dim));
  for (int c = 0; c < dom.dim; ++c)
    rules.push_back(coordinate_rule(dom.rule[static_cast<std::size_t>(c)],
                                    dom.lo(c), dom.hi(c), nodes));
  std::vector<long long> idx(static_cast<std::size_t>(dom.dim), 0);
  Eigen::VectorXd q(dom.dim);
  double vol = 0.0;
  double s1[3] = {0.0, 0.0, 0.0}, s2[3] = {0.0, 0.0, 0.0};
  while (true) {
    double w = 1.0;
    for (int c = 0; c < dom.dim; ++c) {
      const auto& r = rules[static_cast<std::size_t>(c)];
      q(c) = r.nodes(idx[static_cast<std::size_t>(c)]);
      w *= r.weights(idx[static_cast<std::size_t>(c)]);
    }
    const Eigen::MatrixXd G = spec.total_metric(q);
    w *= std::sqrt(std::max(0.0, G.determinant()));
    const FundamentalTensors ft = fundamental_tensors(spec, q);
    const double vals[3] = {ft.normT2, ft.normA2, ft.normN2};
    vol += w;
    for (int k = 0; k < 3; ++k) {
      s1[k] += w * vals[k];
      s2[k] += w * vals[k] * vals[k];
    }
    int c = 0;
    while (c < dom.dim &&
           ++idx[static_cast<std::size_t>(c)] ==
               rules[static_cast<std::size_t>(c)].nodes.size()) {
      idx[static_cast<std::size_t>(c)] = 0;
      ++c;
    }
    if (c == dom.dim) break;
  }
  MeanNorms out;
  double* mean[3] = {&out.t2, &out.a2, &out.n2};
  double* sd[3] = {&out.t2_sd, &out.a2_sd, &out.n2_sd};
  for (int k = 0; k < 3; ++k) {
    *mean[k] = s1[k] / vol;
    *sd[k] = std::sqrt(std::max(0.0, s2[k] / vol - *mean[k] * *mean[k]));
  }
  return out;
}

// Everything the theorem evaluators share for one (model, options) pair.
// Heavier pieces are computed on first use and cached.
struct Ctx {
  const ModelDescriptor& m;
  const CriteriaOptions& o;
  Eigen::MatrixXd pts;
  std::vector<SubPoint> sps;
  std::vector<FundamentalTensors> fts;

  Ctx(const ModelDescriptor& model, const CriteriaOptions& opts)
      : m(model), o(opts) {
    pts = halton_points(m.domain, opts.points, opts.seed);
    if (m.has_submersion) {
      sps.reserve(static_cast<std::size_t>(pts.cols()));
      fts.reserve(static_cast<std::size_t>(pts.cols()));
      for (int k = 0; k < pts.cols(); ++k) {
        sps.push_back(sub_point(m.submersion, pts.col(k)));
        fts.push_back(fundamental_tensors(m.submersion, pts.col(k)));
      }
    }
  }

  int n() const { return m.submersion.total_dim(); }
  int nb() const { return m.submersion.base_dim(); }
  int nf() const { return m.submersion.fibre_dim(); }

  double conformal_defect() {
    if (!conf_) conf_ = conformal_check(m.submersion, pts);
    return *conf_;
  }

  double max_a() {
    if (max_a_) return *max_a_;
    double worst = 0.0;
    for (std::size_t k = 0; k < fts.size(); ++k)
      for (const auto& row : fts[k].a_hh)
        for (const auto& v : row) worst = std::max(worst, gnorm(sps[k].G, v));
    max_a_ = worst;
    return worst;
  }

  double max_t() {
    if (max_t_) return *max_t_;
    double worst = 0.0;
    for (const auto& ft : fts)
      worst = std::max(worst, std::sqrt(std::max(0.0, ft.normT2)));
    max_t_ = worst;
    return worst;
  }

  double max_n() {
    if (max_n_) return *max_n_;
    double worst = 0.0;
    for (const auto& ft : fts)
      worst = std::max(worst, std::sqrt(std::max(0.0, ft.normN2)));
    max_n_ = worst;
    return worst;
  }

  // |nabla N| in the rescaled-metric connection, tensor norm under g.
  double max_cov_n() {
    if (max_cov_n_) return *max_cov_n_;
    double worst = 0.0;
    for (const auto& sp : sps) {
      const Eigen::MatrixXd cn = covariant_vec(sp.nvec, sp.dnvec, sp.gamma_aux);
      const double q = (sp.Ginv * cn * sp.G * cn.transpose()).trace();
      worst = std::max(worst, std::sqrt(std::max(0.0, q)));
    }
    max_cov_n_ = worst;
    return worst;
  }

  // max raw component of nabla T in the rescaled-metric connection.
  double max_cov_t() {
    if (max_cov_t_) return *max_cov_t_;
    double worst = 0.0;
    for (const auto& sp : sps) {
      const std::vector<Tens3> ct = covariant_12(sp.t, sp.dt, sp.gamma_aux);
      for (const auto& layer : ct)
        for (const auto& mat : layer)
          worst = std::max(worst, mat.cwiseAbs().maxCoeff());
    }
    max_cov_t_ = worst;
    return worst;
  }

  // Second fundamental form of the fibres in g: T_U V - g(U, V) H(grad f).
  double max_sff() {
    if (max_sff_) return *max_sff_;
    double worst = 0.0;
    for (std::size_t k = 0; k < fts.size(); ++k) {
      const SubPoint& sp = sps[k];
      const Eigen::VectorXd hg = sp.PH * sp.Ginv * sp.df;
      const auto& tvv = fts[k].t_vv;
      for (std::size_t j = 0; j < tvv.size(); ++j)
        for (std::size_t l = 0; l < tvv[j].size(); ++l) {
          Eigen::VectorXd s = tvv[j][l];
          if (j == l) s -= hg;
          worst = std::max(worst, gnorm(sp.G, s));
        }
    }
    max_sff_ = worst;
    return worst;
  }

  double max_grad_f() {
    if (max_grad_f_) return *max_grad_f_;
    double worst = 0.0;
    for (const auto& sp : sps)
      worst = std::max(worst, gnorm(sp.G, Eigen::VectorXd(sp.Ginv * sp.df)));
    max_grad_f_ = worst;
    return worst;
  }

  double max_vgrad_f() {
    if (max_vgrad_f_) return *max_vgrad_f_;
    double worst = 0.0;
    for (const auto& sp : sps)
      worst = std::max(worst,
                       gnorm(sp.G, Eigen::VectorXd(sp.PV * sp.Ginv * sp.df)));
    max_vgrad_f_ = worst;
    return worst;
  }

  const std::vector<CurvatureBundle>& total_bundles() {
    if (!tot_) {
      std::vector<CurvatureBundle> out;
      out.reserve(static_cast<std::size_t>(pts.cols()));
      for (int k = 0; k < pts.cols(); ++k)
        out.push_back(curvature_bundle(m.metric, pts.col(k)));
      tot_ = std::move(out);
    }
    return *tot_;
  }

  double weyl_max() {
    if (!weyl_) {
      double worst = 0.0;
      for (const auto& b : total_bundles())
        worst = std::max(worst, weyl_tensor(b).max_abs());
      weyl_ = worst;
    }
    return *weyl_;
  }

  void total_scalar_range(double& lo, double& hi) {
    if (!s_lo_) {
      double a = 0.0, b = 0.0;
      bool first = true;
      for (const auto& bun : total_bundles()) {
        a = first ? bun.scalar : std::min(a, bun.scalar);
        b = first ? bun.scalar : std::max(b, bun.scalar);
        first = false;
      }
      s_lo_ = a;
      s_hi_ = b;
    }
    lo = *s_lo_;
    hi = *s_hi_;
  }

  double total_ric_resid(double lambda) {
    double worst = 0.0;
    for (const auto& b : total_bundles()) {
      const Eigen::MatrixXd R = b.ricci.matrix() - lambda * b.jets.G;
      worst = std::max(worst, R.cwiseAbs().maxCoeff());
    }
    return worst;
  }

  struct BaseData {
    double ric_abs = 0.0;
    double s_lo = 0.0, s_hi = 0.0;
  };
  const BaseData& base_data() {
    if (!base_) {
      BaseData d;
      bool first = true;
      for (int k = 0; k < pts.cols(); ++k) {
        const Eigen::VectorXd bp = m.submersion.projection(VecS<double>(pts.col(k)));
        const CurvatureBundle b = curvature_bundle(m.submersion.base_metric, bp);
        d.ric_abs = std::max(d.ric_abs, b.ricci.matrix().cwiseAbs().maxCoeff());
        d.s_lo = first ? b.scalar : std::min(d.s_lo, b.scalar);
        d.s_hi = first ? b.scalar : std::max(d.s_hi, b.scalar);
        first = false;
      }
      base_ = d;
    }
    return *base_;
  }

  struct FibreData {
    bool have = false;   // curvature computable (chart present or dim one)
    double ric_abs = 0.0;
    double s_lo = 0.0, s_hi = 0.0;
  };
  const FibreData& fibre_data() {
    if (!fib_) {
      FibreData d;
      if (nf() == 1) {
        d.have = true;  // one-dimensional fibres are flat
      } else if (m.submersion.fibre_chart) {
        d.have = true;
        bool first = true;
        for (int k = 0; k < pts.cols(); ++k) {
          const FibreChart fc = m.submersion.fibre_chart(pts.col(k));
          const CurvatureBundle b = curvature_bundle(fc.metric, fc.point);
          d.ric_abs = std::max(d.ric_abs, b.ricci.matrix().cwiseAbs().maxCoeff());
          d.s_lo = first ? b.scalar : std::min(d.s_lo, b.scalar);
          d.s_hi = first ? b.scalar : std::max(d.s_hi, b.scalar);
          first = false;
        }
      }
      fib_ = d;
    }
    return *fib_;
  }

  // Einstein residual of the fibres against the claimed constant.
  double fibre_einstein_resid(double lambda_f) {
    if (nf() == 1) return std::abs(lambda_f);
    double worst = 0.0;
    for (int k = 0; k < pts.cols(); ++k) {
      const FibreChart fc = m.submersion.fibre_chart(pts.col(k));
      const CurvatureBundle b = curvature_bundle(fc.metric, fc.point);
      const Eigen::MatrixXd R = b.ricci.matrix() - lambda_f * b.jets.G;
      worst = std::max(worst, R.cwiseAbs().maxCoeff());
    }
    return worst;
  }

  void rmix_range(double& lo, double& hi) {
    if (!rmix_lo_) {
      double a = 0.0, b = 0.0;
      bool first = true;
      const auto& bundles = total_bundles();
      for (std::size_t k = 0; k < bundles.size(); ++k) {
        const SplitFrame& fr = fts[k].frame;
        double sum = 0.0;
        for (int i = 0; i < fr.horizontal.vectors.cols(); ++i)
          for (int j = 0; j < fr.vertical.vectors.cols(); ++j)
            sum += sectional_curvature(bundles[k], fr.horizontal.vector(i),
                                       fr.vertical.vector(j));
        a = first ? sum : std::min(a, sum);
        b = first ? sum : std::max(b, sum);
        first = false;
      }
      rmix_lo_ = a;
      rmix_hi_ = b;
    }
    lo = *rmix_lo_;
    hi = *rmix_hi_;
  }

  const MeanNorms& means() {
    if (!means_) means_ = norm_means(m.submersion, o.norm_nodes);
    return *means_;
  }

 private:
  std::optional<double> conf_, max_a_, max_t_, max_n_, max_cov_n_, max_cov_t_,
      max_sff_, max_grad_f_, max_vgrad_f_, weyl_, s_lo_, s_hi_, rmix_lo_,
      rmix_hi_;
  std::optional<std::vector<CurvatureBundle>> tot_;
  std::optional<BaseData> base_;
  std::optional<FibreData> fib_;
  std::optional<MeanNorms> means_;
};

// ----------------------------------------------------------- report helpers

HypothesisStatus row(const std::string& name, double residual, double tol,
                     const std::string& note = "") {
  HypothesisStatus h;
  h.name = name;
  h.residual = residual;
  h.tolerance = tol;
  h.satisfied = residual <= tol;
  h.note = note;
  return h;
}

HypothesisStatus row_flag(const std::string& name, bool ok,
                          const std::string& note = "") {
  HypothesisStatus h;
  h.name = name;
  h.residual = ok ? 0.0 : 1.0;
  h.tolerance = 0.0;
  h.satisfied = ok;
  h.note = note;
  return h;
}

// Violation of "all sampled values share one sign": zero when the range
// stays on either side of zero.
double sign_violation(double lo, double hi) {
  return std::min(std::max(0.0, -lo), std::max(0.0, hi));
}

void finalize(CriterionReport& r, double criterion_tol) {
  r.applicable = true;
  for (const auto& h : r.hypotheses)
    if (!h.satisfied) {
      r.applicable = false;
      if (r.reason.empty()) r.reason = "hypothesis failed: " + h.name;
    }
  if (!r.applicable) {
    r.verdict = "not-applicable";
    return;
  }
  r.criterion_residual = std::abs(r.criterion_left - r.criterion_right);
  r.verdict = r.criterion_residual <= criterion_tol ? "rigid-consistent"
                                                    : "violated";
}

bool submersion_gate(Ctx& c, CriterionReport& r) {
  r.hypotheses.push_back(
      row_flag("submersion structure present", c.m.has_submersion));
  return c.m.has_submersion;
}

// Sum over product components of einstein_lambda times the horizontal (or
// vertical) dimension; unavailable without verified component metadata.
std::optional<double> component_sum(const ModelDescriptor& m, bool horizontal) {
  if (m.components.empty()) return std::nullopt;
  double acc = 0.0;
  for (const auto& comp : m.components) {
    if (!comp.einstein) return std::nullopt;
    acc += comp.einstein_lambda * (horizontal ? comp.h_dim : comp.v_dim);
  }
  return acc;
}

HypothesisStatus component_row(const ModelDescriptor& m, bool horizontal) {
  const auto sum = component_sum(m, horizontal);
  return row_flag("Einstein component metadata present", sum.has_value(),
                  sum ? "" : "missing metadata: Einstein product components");
}

// Pointwise ingredients of the trace identities backing the criteria.
struct PointTerms {
  double t2, a2, n2, nf_f, lap, hlap, vlap, hg2, vg2, div_h, div_v;
};

PointTerms point_terms(const SubPoint& sp, const FundamentalTensors& ft) {
  PointTerms pt{};
  pt.t2 = ft.normT2;
  pt.a2 = ft.normA2;
  pt.n2 = ft.normN2;
  pt.nf_f = sp.df.dot(sp.nvec);
  const Eigen::MatrixXd H = hess_f(sp);
  pt.lap = (sp.Ginv * H).trace();
  pt.hlap = 0.0;
  pt.vlap = 0.0;
  const SplitFrame& fr = ft.frame;
  for (int i = 0; i < fr.horizontal.vectors.cols(); ++i) {
    const Eigen::VectorXd x = fr.horizontal.vector(i);
    pt.hlap += x.dot(H * x);
  }
  for (int j = 0; j < fr.vertical.vectors.cols(); ++j) {
    const Eigen::VectorXd u = fr.vertical.vector(j);
    pt.vlap += u.dot(H * u);
  }
  const Eigen::VectorXd grad = sp.Ginv * sp.df;
  const Eigen::VectorXd hg = sp.PH * grad, vg = sp.PV * grad;
  pt.hg2 = dot2(hg, sp.G, hg);
  pt.vg2 = dot2(vg, sp.G, vg);
  pt.div_h = div_projected(sp, true);
  pt.div_v = div_projected(sp, false);
  return pt;
}

// Max residual of one pointwise trace identity over the samples.
template <class F>
double support_resid(Ctx& c, F&& f) {
  double worst = 0.0;
  for (std::size_t k = 0; k < c.sps.size(); ++k)
    worst = std::max(worst, std::abs(f(point_terms(c.sps[k], c.fts[k]))));
  return worst;
}

void add_mean_norm_terms(Ctx& c, CriterionReport& r, bool with_t, bool with_a,
                         bool with_n) {
  const MeanNorms& mn = c.means();
  struct Item {
    bool on;
    const char* key;
    double mean, sd;
  };
  const Item items[] = {{with_t, "norm_t_sq", mn.t2, mn.t2_sd},
                        {with_a, "norm_a_sq", mn.a2, mn.a2_sd},
                        {with_n, "norm_n_sq", mn.n2, mn.n2_sd}};
  for (const auto& it : items) {
    if (!it.on) continue;
    r.terms[std::string("mean_") + it.key] = it.mean;
    r.terms[std::string("stddev_") + it.key] = it.sd;
    if (it.sd > 1e-6 * (1.0 + std::abs(it.mean)))
      r.warnings.push_back(std::string(it.key) +
                           " varies over the model; the criterion treats it "
                           "as a constant");
  }
}

const char* kRescaledNote = "derivative taken in the rescaled-metric connection";

// ------------------------------------------------------------ the theorems

CriterionReport eval_t31(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T3_1";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(
      row("integrable horizontal distribution", c.max_a(), tol));
  r.hypotheses.push_back(
      row("parallel mean-curvature field", c.max_cov_n(), tol, kRescaledNote));
  r.hypotheses.push_back(row_flag("base dimension at least two", c.nb() >= 2));
  const bool have_lf = c.m.fibre_einstein_lambda.has_value();
  const bool have_l = c.m.einstein_lambda.has_value();
  r.hypotheses.push_back(row_flag(
      "total and fibre Einstein constants known", have_lf && have_l,
      have_lf && have_l ? "" : "missing metadata: Einstein constants"));
  if (have_lf && (c.nf() == 1 || c.m.submersion.fibre_chart)) {
    r.hypotheses.push_back(row("Einstein fibres",
                               c.fibre_einstein_resid(*c.m.fibre_einstein_lambda),
                               tol,
                               c.nf() == 1 ? "one-dimensional fibres are flat"
                                           : ""));
  } else {
    r.hypotheses.push_back(row_flag("Einstein fibres", false,
                                    have_lf ? "fibre chart unavailable"
                                            : "missing metadata: fibre "
                                              "Einstein constant"));
  }
  if (have_l)
    r.hypotheses.push_back(
        row("Einstein total space", c.total_ric_resid(*c.m.einstein_lambda), tol));
  if (have_l && have_lf) {
    const double l = *c.m.einstein_lambda, lf = *c.m.fibre_einstein_lambda;
    const double fd = c.nf(), bd = c.nb();
    r.criterion_left = l;
    r.criterion_right = lf;
    r.terms["vertical_trace_identity"] = support_resid(c, [&](const PointTerms& p) {
      return l * fd -
             (lf * fd - p.n2 + (2.0 * fd - bd) * p.nf_f +
              fd * (bd - fd) * p.hg2 - fd * p.hlap + bd * (fd - 1.0) * p.vg2 -
              bd * p.vlap);
    });
    r.terms["parallel_n_reduction"] = support_resid(c, [&](const PointTerms& p) {
      return l * fd - (lf * fd - fd * p.div_h - bd * p.div_v +
                       bd * (bd - 1.0) * p.vg2);
    });
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t33(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T3_3";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(
      row("integrable horizontal distribution", c.max_a(), tol));
  r.hypotheses.push_back(
      row("parallel mean-curvature field", c.max_cov_n(), tol, kRescaledNote));
  r.hypotheses.push_back(row("Ricci-flat base", c.base_data().ric_abs, tol));
  r.hypotheses.push_back(component_row(c.m, true));
  add_mean_norm_terms(c, r, true, false, true);
  if (const auto sum = component_sum(c.m, true)) {
    const MeanNorms& mn = c.means();
    r.criterion_left = *sum;
    r.criterion_right =
        -mn.t2 - mn.n2 / c.nf() * (c.n() + c.nb() - 4.0);
  }
  if (c.m.einstein_lambda) {
    const double l = *c.m.einstein_lambda;
    const double nn = c.n(), bd = c.nb(), fd = c.nf();
    r.terms["horizontal_trace_identity"] =
        support_resid(c, [&](const PointTerms& p) {
          return l * bd -
                 (-p.t2 - p.n2 / fd * (nn + bd - 4.0) - (nn - 2.0) * p.div_h +
                  (nn - 2.0) * (nn - 1.0) * p.hg2 - bd * p.lap);
        });
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t36(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T3_6";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(row_flag("base dimension at least two", c.nb() >= 2));
  r.hypotheses.push_back(row("vanishing mean-curvature field", c.max_n(), tol));
  const bool have_lf = c.m.fibre_einstein_lambda.has_value();
  if (have_lf && (c.nf() == 1 || c.m.submersion.fibre_chart)) {
    r.hypotheses.push_back(row("Einstein fibres",
                               c.fibre_einstein_resid(*c.m.fibre_einstein_lambda),
                               tol,
                               c.nf() == 1 ? "one-dimensional fibres are flat"
                                           : ""));
  } else {
    r.hypotheses.push_back(row_flag("Einstein fibres", false,
                                    have_lf ? "fibre chart unavailable"
                                            : "missing metadata: fibre "
                                              "Einstein constant"));
  }
  r.hypotheses.push_back(component_row(c.m, false));
  add_mean_norm_terms(c, r, false, true, false);
  if (const auto sum = component_sum(c.m, false); sum && have_lf) {
    const MeanNorms& mn = c.means();
    r.criterion_left = *sum;
    r.criterion_right = *c.m.fibre_einstein_lambda * c.nf() + mn.a2;
  }
  if (c.m.einstein_lambda && have_lf) {
    const double l = *c.m.einstein_lambda, lf = *c.m.fibre_einstein_lambda;
    const double fd = c.nf(), bd = c.nb();
    r.terms["fibre_comparison_identity"] =
        support_resid(c, [&](const PointTerms& p) {
          return (l - lf) * fd - (p.a2 - fd * p.div_h - bd * p.div_v +
                                  bd * (bd - 1.0) * p.vg2);
        });
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t312(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T3_12";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(row("vanishing mean-curvature field", c.max_n(), tol));
  r.hypotheses.push_back(row("Ricci-flat base", c.base_data().ric_abs, tol));
  r.hypotheses.push_back(component_row(c.m, true));
  add_mean_norm_terms(c, r, true, true, false);
  if (const auto sum = component_sum(c.m, true)) {
    const MeanNorms& mn = c.means();
    r.criterion_left = *sum + 2.0 * mn.a2 + mn.t2;
    r.criterion_right = 0.0;
  }
  if (c.m.einstein_lambda) {
    const double l = *c.m.einstein_lambda;
    const double nn = c.n(), bd = c.nb();
    r.terms["horizontal_trace_identity"] =
        support_resid(c, [&](const PointTerms& p) {
          return l * bd -
                 (-2.0 * p.a2 - p.t2 - (nn - 2.0) * p.div_h +
                  (nn - 2.0) * (nn - 1.0) * p.hg2 - bd * p.lap);
        });
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t320(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T3_20";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(
      row("totally geodesic fibres", c.max_t() + c.max_sff(), tol));
  r.hypotheses.push_back(row_flag("base dimension at least two", c.nb() >= 2));
  r.hypotheses.push_back(row("Ricci-flat base", c.base_data().ric_abs, tol));
  r.hypotheses.push_back(component_row(c.m, true));
  add_mean_norm_terms(c, r, false, true, false);
  if (const auto sum = component_sum(c.m, true)) {
    const MeanNorms& mn = c.means();
    r.criterion_left = *sum + 2.0 * mn.a2;
    r.criterion_right = 0.0;
  }
  if (c.m.einstein_lambda) {
    const double l = *c.m.einstein_lambda;
    const double bd = c.nb();
    r.terms["horizontal_trace_identity"] =
        support_resid(c, [&](const PointTerms& p) {
          return l * bd -
                 (-2.0 * p.a2 - (bd - 2.0) * p.div_h - bd * p.lap +
                  (bd - 2.0) * (bd - 1.0) * p.hg2);
        });
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

// Product structure required by the scalar-sum criteria: every component
// conformally flat, of dimension at least four, split evenly between the
// horizontal and vertical distributions.
HypothesisStatus balanced_lcf_row(const ModelDescriptor& m) {
  if (m.components.empty())
    return row_flag("balanced conformally flat components", false,
                    "missing metadata: product components");
  int bad = 0;
  std::string note;
  for (const auto& comp : m.components) {
    if (comp.lcf && comp.dim >= 4 && comp.h_dim == comp.v_dim) continue;
    ++bad;
    if (!note.empty()) note += ", ";
    note += comp.name;
  }
  if (bad == 0) return row_flag("balanced conformally flat components", true);
  return row_flag("balanced conformally flat components", false,
                  "unsuitable components: " + note);
}

HypothesisStatus component_sign_row(const ModelDescriptor& m) {
  if (m.components.empty())
    return row_flag("component scalar curvatures share one sign", false,
                    "missing metadata: product components");
  double lo = m.components.front().scalar, hi = lo;
  for (const auto& comp : m.components) {
    lo = std::min(lo, comp.scalar);
    hi = std::max(hi, comp.scalar);
  }
  return row("component scalar curvatures share one sign",
             sign_violation(lo, hi), 0.0);
}

// Sum of s_i / (1 - n_i) over the components, the comparison level for the
// total scalar curvature.
std::optional<double> scalar_bound(const ModelDescriptor& m) {
  if (m.components.empty()) return std::nullopt;
  double acc = 0.0;
  for (const auto& comp : m.components) {
    if (comp.dim <= 1) return std::nullopt;
    acc += comp.scalar / (1.0 - comp.dim);
  }
  return acc;
}

CriterionReport eval_t42(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T4_2";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(balanced_lcf_row(c.m));
  const auto bound = scalar_bound(c.m);
  double s_lo = 0.0, s_hi = 0.0;
  c.total_scalar_range(s_lo, s_hi);
  bool branch1 = false, branch2 = false;
  std::string note;
  if (bound) {
    r.terms["component_scalar_bound"] = *bound;
    branch1 = c.max_t() <= tol && s_hi <= *bound + tol;
    branch2 = c.max_cov_n() <= tol && c.max_a() <= tol && s_lo >= *bound - tol;
    if (branch1) note = "first condition set holds";
    if (branch2) note += note.empty() ? "second condition set holds"
                                      : "; second condition set holds";
  }
  r.hypotheses.push_back(row_flag(
      "vanishing shape tensor with dominated scalar curvature, or parallel "
      "mean curvature with integrable horizontal distribution and dominating "
      "scalar curvature",
      branch1 || branch2, note));
  r.criterion_left = c.max_grad_f();
  r.criterion_right = 0.0;
  r.terms["max_grad_f"] = c.max_grad_f();
  r.terms["total_scalar_min"] = s_lo;
  r.terms["total_scalar_max"] = s_hi;
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t45(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T4_5";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(balanced_lcf_row(c.m));
  r.hypotheses.push_back(component_sign_row(c.m));
  const bool have_l = c.m.einstein_lambda.has_value();
  r.hypotheses.push_back(row_flag(
      "Einstein constant metadata present", have_l,
      have_l ? "quasi-Einstein data taken with constant potential"
             : "missing metadata: Einstein constant"));
  if (have_l) {
    const double l = *c.m.einstein_lambda;
    r.hypotheses.push_back(
        row("quasi-Einstein total space", c.total_ric_resid(l), tol,
            "constant potential reduces the condition to the Einstein one"));
    const bool b1 =
        l >= -tol && c.max_cov_n() <= tol && c.max_a() <= tol;
    const bool b2 = l <= tol && c.max_t() <= tol;
    const bool b3 = c.max_a() <= tol && c.max_t() <= tol;
    std::string note;
    if (b1) note = "first condition set holds";
    if (b2) note += note.empty() ? "second condition set holds"
                                 : "; second condition set holds";
    if (b3) note += note.empty() ? "third condition set holds"
                                 : "; third condition set holds";
    r.hypotheses.push_back(row_flag(
        "sign of the quasi-Einstein constant compatible with the tensor "
        "conditions",
        b1 || b2 || b3, note));
  }
  const double ric = c.total_ric_resid(0.0);
  r.terms["total_ricci_flat_residual"] = ric;
  r.terms["max_grad_f"] = c.max_grad_f();
  r.criterion_left = std::max(ric, c.max_grad_f());
  r.criterion_right = 0.0;
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t48(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T4_8";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.notes.push_back("fibre-side reading: the quasi-Einstein structure is "
                    "placed on the fibres");
  r.hypotheses.push_back(row_flag("equal base and fibre dimensions",
                                  c.nb() == c.nf()));
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  if (c.n() >= 4) {
    r.hypotheses.push_back(
        row("conformally flat total space", c.weyl_max(), tol));
  } else {
    r.hypotheses.push_back(row_flag("conformally flat total space", c.m.lcf,
                                    "metadata (dimension below the Weyl "
                                    "tensor's support)"));
  }
  const auto& fd = c.fibre_data();
  if (fd.have) {
    r.hypotheses.push_back(row("fibre scalar curvature has one sign",
                               sign_violation(fd.s_lo, fd.s_hi), tol));
  } else {
    r.hypotheses.push_back(row_flag("fibre scalar curvature has one sign",
                                    false, "fibre chart unavailable"));
  }
  const bool have_lf = c.m.fibre_einstein_lambda.has_value();
  if (have_lf && fd.have) {
    r.hypotheses.push_back(
        row("quasi-Einstein fibres",
            c.fibre_einstein_resid(*c.m.fibre_einstein_lambda), tol,
            "constant potential reduces the condition to the Einstein one"));
    const double l = *c.m.fibre_einstein_lambda;
    const auto& bd = c.base_data();
    const bool b1 = c.max_t() <= tol && bd.s_hi <= tol && l <= tol;
    const bool b2 = c.max_a() <= tol && c.max_cov_t() <= tol &&
                    bd.s_lo >= -tol && l >= -tol;
    std::string note;
    if (b1) note = "first condition set holds";
    if (b2) note += note.empty() ? "second condition set holds"
                                 : "; second condition set holds";
    r.hypotheses.push_back(row_flag(
        "vanishing shape tensor with non-positive base scalar curvature, or "
        "vanishing integrability tensor with parallel shape tensor and "
        "non-negative base scalar curvature",
        b1 || b2, note));
    r.terms["base_scalar_min"] = bd.s_lo;
    r.terms["base_scalar_max"] = bd.s_hi;
  } else if (!have_lf) {
    r.hypotheses.push_back(row_flag("quasi-Einstein fibres", false,
                                    "missing metadata: fibre Einstein "
                                    "constant"));
  }
  if (fd.have) {
    r.terms["fibre_ricci_flat_residual"] = fd.ric_abs;
    const double base_s =
        std::max(std::abs(c.base_data().s_lo), std::abs(c.base_data().s_hi));
    r.terms["base_scalar_flat_residual"] = base_s;
    r.terms["max_vertical_grad_f"] = c.max_vgrad_f();
    r.criterion_left =
        std::max({fd.ric_abs, base_s, c.max_vgrad_f(), c.max_t(), c.max_a()});
    r.criterion_right = 0.0;
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_t412(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "T4_12";
  const double tol = c.o.hypothesis_tol;
  if (!submersion_gate(c, r)) {
    finalize(r, c.o.criterion_tol);
    return r;
  }
  r.hypotheses.push_back(
      row("conformal submersion compatibility", c.conformal_defect(), tol));
  r.hypotheses.push_back(row("vanishing shape tensor", c.max_t(), tol));
  double lo = 0.0, hi = 0.0;
  c.rmix_range(lo, hi);
  r.hypotheses.push_back(
      row("non-positive mixed scalar curvature", std::max(0.0, hi), tol));
  r.terms["mixed_scalar_min"] = lo;
  r.terms["mixed_scalar_max"] = hi;
  r.terms["max_grad_f"] = c.max_grad_f();
  r.criterion_left = std::max(std::abs(lo), std::abs(hi));
  r.criterion_right = 0.0;
  finalize(r, c.o.criterion_tol);
  return r;
}

CriterionReport eval_qe(Ctx& c) {
  CriterionReport r;
  r.theorem_id = "QE";
  const bool have_l = c.m.einstein_lambda.has_value();
  r.hypotheses.push_back(row_flag(
      "Einstein constant metadata present", have_l,
      have_l ? "" : "missing metadata: Einstein constant"));
  if (have_l) {
    r.notes.push_back("constant potential, infinite weight: the condition "
                      "reduces to the Einstein equation");
    r.criterion_left = quasi_einstein_residual(
        c.m.metric, zero_scalar(), 0.0, *c.m.einstein_lambda, c.pts, true);
    r.criterion_right = 0.0;
  }
  finalize(r, c.o.criterion_tol);
  return r;
}

}  // namespace

double quasi_einstein_residual(const MetricField& g, const ScalarField& h,
                               double m, double lambda,
                               const Eigen::MatrixXd& points, bool m_infinite) {
  if (!m_infinite && m <= 0.0)
    throw PreconditionError(
        "quasi-Einstein weight must be positive unless flagged infinite");
  double worst = 0.0;
  for (int k = 0; k < points.cols(); ++k) {
    const CurvatureBundle b = curvature_bundle(g, points.col(k));
    const SymBilinear hess = hessian(b, h);
    Eigen::MatrixXd R = b.ricci.matrix() + hess.matrix() - lambda * b.jets.G;
    if (!m_infinite) {
      const Eigen::VectorXd dh = b.jets.G * metric_gradient(b.jets, h, b.point);
      R -= dh * dh.transpose() / m;
    }
    worst = std::max(worst, R.cwiseAbs().maxCoeff());
  }
  return worst;
}

const std::vector<std::string>& criterion_ids() {
  static const std::vector<std::string> ids = {
      "T3_1", "T3_3", "T3_6", "T3_12", "T3_20",
      "T4_2", "T4_5", "T4_8", "T4_12", "QE"};
  return ids;
}

std::string describe_theorem(const std::string& theorem_id) {
  std::ostringstream os;
  if (theorem_id == "T3_1") {
    os << "Rigidity from Einstein fibres.\n"
       << "hypotheses: conformal submersion; integrable horizontal "
          "distribution; parallel mean-curvature field; base dimension >= 2; "
          "Einstein fibres; total and fibre Einstein constants known\n"
       << "criterion: the total and fibre Einstein constants coincide";
  } else if (theorem_id == "T3_3") {
    os << "Rigidity over a Ricci-flat base with integrable horizontal "
          "distribution.\n"
       << "hypotheses: conformal submersion; integrable horizontal "
          "distribution; parallel mean-curvature field; Ricci-flat base; "
          "Einstein component metadata\n"
       << "criterion: sum_i lambda_i m_i = -|T|^2 - |N|^2 (dim M + dim B - 4)"
          " / dim F, with m_i the horizontal dimensions of the components";
  } else if (theorem_id == "T3_6") {
    os << "Rigidity with vanishing mean curvature and Einstein fibres.\n"
       << "hypotheses: conformal submersion; base dimension >= 2; N = 0; "
          "Einstein fibres; Einstein component metadata\n"
       << "criterion: sum_i lambda_i m_i = lambda_F dim F + |A|^2, with m_i "
          "the vertical dimensions of the components";
  } else if (theorem_id == "T3_12") {
    os << "Rigidity with vanishing mean curvature over a Ricci-flat base.\n"
       << "hypotheses: conformal submersion; N = 0; Ricci-flat base; "
          "Einstein component metadata\n"
       << "criterion: sum_i lambda_i m_i + 2|A|^2 + |T|^2 = 0, with m_i the "
          "horizontal dimensions of the components";
  } else if (theorem_id == "T3_20") {
    os << "Rigidity with totally geodesic fibres over a Ricci-flat base.\n"
       << "hypotheses: conformal submersion; totally geodesic fibres; base "
          "dimension >= 2; Ricci-flat base; Einstein component metadata\n"
       << "criterion: sum_i lambda_i m_i + 2|A|^2 = 0, with m_i the "
          "horizontal dimensions of the components";
  } else if (theorem_id == "T4_2") {
    os << "Rigidity of balanced products of conformally flat components.\n"
       << "hypotheses: conformal submersion; components conformally flat, of "
          "dimension >= 4, split evenly between the distributions; either T "
          "= 0 with s <= sum_i s_i / (1 - n_i), or parallel N and integrable "
          "horizontal distribution with s >= sum_i s_i / (1 - n_i)\n"
       << "criterion: the factor is constant (max |grad f| = 0)";
  } else if (theorem_id == "T4_5") {
    os << "Quasi-Einstein total space over balanced conformally flat "
          "components.\n"
       << "hypotheses: conformal submersion; components conformally flat, of "
          "dimension >= 4, split evenly; component scalar curvatures of one "
          "sign; quasi-Einstein total space; one of three sign/tensor "
          "condition sets\n"
       << "criterion: the total space is Ricci-flat and the factor constant";
  } else if (theorem_id == "T4_8") {
    os << "Quasi-Einstein fibres of a conformally flat total space.\n"
       << "hypotheses: equal base and fibre dimensions; conformal "
          "submersion; conformally flat total space; fibre scalar curvature "
          "of one sign; quasi-Einstein fibres; either T = 0 with "
          "non-positive base scalar curvature, or A = 0 with parallel T and "
          "non-negative base scalar curvature\n"
       << "criterion: fibres Ricci-flat, base scalar-flat, and the factor "
          "constant along fibres";
  } else if (theorem_id == "T4_12") {
    os << "Rigidity from non-positive mixed scalar curvature.\n"
       << "hypotheses: conformal submersion; T = 0; mixed scalar curvature "
          "R_mix <= 0\n"
       << "criterion: R_mix = 0";
  } else if (theorem_id == "QE") {
    os << "Generalized Einstein equation with constant potential.\n"
       << "hypotheses: Einstein constant metadata present\n"
       << "criterion: max residual of Ric = lambda g over sample points";
  } else {
    throw ConfigError("unknown theorem id: " + theorem_id);
  }
  return os.str();
}

CriterionReport evaluate_criterion(const std::string& theorem_id,
                                   const ModelDescriptor& model,
                                   const CriteriaOptions& opts) {
  if (opts.points < 1) throw ConfigError("criteria need at least one point");
  if (opts.norm_nodes < 2)
    throw ConfigError("norm quadrature needs at least two nodes");
  Ctx c(model, opts);
  if (theorem_id == "T3_1") return eval_t31(c);
  if (theorem_id == "T3_3") return eval_t33(c);
  if (theorem_id == "T3_6") return eval_t36(c);
  if (theorem_id == "T3_12") return eval_t312(c);
  if (theorem_id == "T3_20") return eval_t320(c);
  if (theorem_id == "T4_2") return eval_t42(c);
  if (theorem_id == "T4_5") return eval_t45(c);
  if (theorem_id == "T4_8") return eval_t48(c);
  if (theorem_id == "T4_12") return eval_t412(c);
  if (theorem_id == "QE") return eval_qe(c);
  throw ConfigError("unknown theorem id: " + theorem_id);
}

std::vector<CriterionReport> evaluate_all_criteria(const ModelDescriptor& model,
                                                   const CriteriaOptions& opts) {
  if (opts.points < 1) throw ConfigError("criteria need at least one point");
  if (opts.norm_nodes < 2)
    throw ConfigError("norm quadrature needs at least two nodes");
  Ctx c(model, opts);
  std::vector<CriterionReport> out;
  out.reserve(criterion_ids().size());
  for (const auto& id : criterion_ids()) {
    if (id == "T3_1") out.push_back(eval_t31(c));
    else if (id == "T3_3") out.push_back(eval_t33(c));
    else if (id == "T3_6") out.push_back(eval_t36(c));
    else if (id == "T3_12") out.push_back(eval_t312(c));
    else if (id == "T3_20") out.push_back(eval_t320(c));
    else if (id == "T4_2") out.push_back(eval_t42(c));
    else if (id == "T4_5") out.push_back(eval_t45(c));
    else if (id == "T4_8") out.push_back(eval_t48(c));
    else if (id == "T4_12") out.push_back(eval_t412(c));
    else out.push_back(eval_qe(c));
  }
  return out;
}

}  // namespace subcurv
