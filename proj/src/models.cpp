#include "subcurv/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>
#include <sstream>

#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"
#include "subcurv/quadrature.hpp"

namespace subcurv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------- parsing

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  const std::string t = strip(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw ConfigError("bad number for " + what + ": '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("expected integer for " + what + ": '" + s + "'");
  return i;
}

// Tracks which keys a model consumed so leftovers can be rejected.
class ParamReader {
 public:
  explicit ParamReader(const ModelParams& p) : params_(p) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return params_.count(key) > 0;
  }
  std::string get_string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }
  double get_double(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = params_.find(key);
    return it == params_.end() ? fallback : parse_double(it->second, key);
  }
  int get_int(const std::string& key, int fallback) {
    used_.insert(key);
    auto it = params_.find(key);
    return it == params_.end() ? fallback : parse_int(it->second, key);
  }
  std::string require(const std::string& key) {
    used_.insert(key);
    auto it = params_.find(key);
    if (it == params_.end()) throw ConfigError("missing model parameter '" + key + "'");
    return it->second;
  }
  void mark_prefix(const std::string& prefix) { prefixes_.push_back(prefix); }
  void finish() const {
    for (const auto& [key, value] : params_) {
      (void)value;
      if (used_.count(key)) continue;
      bool covered = false;
      for (const auto& p : prefixes_)
        if (key.rfind(p, 0) == 0) covered = true;
      if (!covered) throw ConfigError("unknown model parameter '" + key + "'");
    }
  }

 private:
  const ModelParams& params_;
  std::set<std::string> used_;
  std::vector<std::string> prefixes_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- factors

enum class FactorKind { Circle, Torus, Sphere2, Sphere3 };

struct FactorSpec {
  FactorKind kind = FactorKind::Circle;
  double r = 1.0;
  Eigen::VectorXd periods;  // Torus only
  int offset = 0;

  int dim() const {
    switch (kind) {
      case FactorKind::Circle: return 1;
      case FactorKind::Torus: return static_cast<int>(periods.size());
      case FactorKind::Sphere2: return 2;
      case FactorKind::Sphere3: return 3;
    }
    return 0;
  }
  double volume() const {
    switch (kind) {
      case FactorKind::Circle: return kTwoPi * r;
      case FactorKind::Torus: return periods.prod();
      case FactorKind::Sphere2: return 4.0 * kPi * r * r;
      case FactorKind::Sphere3: return 2.0 * kPi * kPi * r * r * r;
    }
    return 0.0;
  }
  double scalar() const {
    switch (kind) {
      case FactorKind::Sphere2: return 2.0 / (r * r);
      case FactorKind::Sphere3: return 6.0 / (r * r);
      default: return 0.0;
    }
  }
  double einstein_lambda() const {
    switch (kind) {
      case FactorKind::Sphere2: return 1.0 / (r * r);
      case FactorKind::Sphere3: return 2.0 / (r * r);
      default: return 0.0;
    }
  }
  bool flat() const {
    return kind == FactorKind::Circle || kind == FactorKind::Torus;
  }
  std::string label() const {
    switch (kind) {
      case FactorKind::Circle: return "circle";
      case FactorKind::Torus: return "torus";
      case FactorKind::Sphere2: return "sphere2";
      case FactorKind::Sphere3: return "sphere3";
    }
    return "";
  }
};

// Grammar: semicolon-separated list of circle(r) | torus(L1,...) |
// sphere2(r) | sphere3(r).
std::vector<FactorSpec> parse_factors(const std::string& text) {
  std::vector<FactorSpec> out;
  int offset = 0;
  for (const std::string& piece : split(text, ';')) {
    const std::string item = strip(piece);
    if (item.empty()) throw ConfigError("empty factor in '" + text + "'");
    const std::size_t open = item.find('(');
    if (open == std::string::npos || item.back() != ')')
      throw ConfigError("factor '" + item + "' is not kind(args)");
    const std::string kind = strip(item.substr(0, open));
    const std::string args = item.substr(open + 1, item.size() - open - 2);
    FactorSpec f;
    f.offset = offset;
    if (kind == "circle") {
      f.kind = FactorKind::Circle;
      f.r = parse_double(args, "circle radius");
      if (f.r <= 0.0) throw ConfigError("circle radius must be positive");
    } else if (kind == "torus") {
      f.kind = FactorKind::Torus;
      const auto parts = split(args, ',');
      if (parts.empty() || parts.size() > 4)
        throw ConfigError("torus takes 1 to 4 periods");
      f.periods = Eigen::VectorXd(static_cast<int>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i) {
        f.periods(static_cast<int>(i)) = parse_double(parts[i], "torus period");
        if (f.periods(static_cast<int>(i)) <= 0.0)
          throw ConfigError("torus periods must be positive");
      }
    } else if (kind == "sphere2" || kind == "sphere3") {
      f.kind = kind == "sphere2" ? FactorKind::Sphere2 : FactorKind::Sphere3;
      f.r = parse_double(args, kind + " radius");
      if (f.r <= 0.0) throw ConfigError("sphere radius must be positive");
    } else {
      throw ConfigError("unknown factor kind '" + kind + "'");
    }
    offset += f.dim();
    out.push_back(std::move(f));
  }
  return out;
}

void append_coord(ChartDomain& d, double lo, double hi, CoordRule rule,
                  double slo, double shi) {
  const int n = d.dim + 1;
  Eigen::VectorXd nlo(n), nhi(n), nslo(n), nshi(n);
  if (d.dim > 0) {
    nlo.head(d.dim) = d.lo;
    nhi.head(d.dim) = d.hi;
    nslo.head(d.dim) = d.sample_lo;
    nshi.head(d.dim) = d.sample_hi;
  }
  nlo(n - 1) = lo;
  nhi(n - 1) = hi;
  nslo(n - 1) = slo;
  nshi(n - 1) = shi;
  d.dim = n;
  d.lo = nlo;
  d.hi = nhi;
  d.sample_lo = nslo;
  d.sample_hi = nshi;
  d.rule.push_back(rule);
}

void append_factor_domain(ChartDomain& d, const FactorSpec& f) {
  switch (f.kind) {
    case FactorKind::Circle:
      append_coord(d, 0.0, kTwoPi, CoordRule::Periodic, 0.05, kTwoPi - 0.05);
      break;
    case FactorKind::Torus:
      for (int i = 0; i < f.periods.size(); ++i) {
        const double L = f.periods(i);
        append_coord(d, 0.0, L, CoordRule::Periodic, 0.02 * L, 0.98 * L);
      }
      break;
    case FactorKind::Sphere2:
      append_coord(d, 0.0, kPi, CoordRule::PolarCos, 0.2, kPi - 0.2);
      append_coord(d, 0.0, kTwoPi, CoordRule::Periodic, 0.05, kTwoPi - 0.05);
      break;
    case FactorKind::Sphere3:
      append_coord(d, 0.0, kPi / 2.0, CoordRule::PolarCos, 0.15, kPi / 2.0 - 0.15);
      append_coord(d, 0.0, kTwoPi, CoordRule::Periodic, 0.05, kTwoPi - 0.05);
      append_coord(d, 0.0, kTwoPi, CoordRule::Periodic, 0.05, kTwoPi - 0.05);
      break;
  }
}

ChartDomain factors_domain(const std::vector<FactorSpec>& fs) {
  ChartDomain d;
  for (const auto& f : fs) append_factor_domain(d, f);
  d.validate();
  return d;
}

template <class S>
MatS<S> product_metric_eval(const std::vector<FactorSpec>& fs, int n,
                            const VecS<S>& q) {
  using std::cos;
  using std::sin;
  MatS<S> G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = S(0.0);
  for (const auto& f : fs) {
    const int o = f.offset;
    const double r2 = f.r * f.r;
    switch (f.kind) {
      case FactorKind::Circle:
        G(o, o) = S(r2);
        break;
      case FactorKind::Torus:
        for (int i = 0; i < f.periods.size(); ++i) G(o + i, o + i) = S(1.0);
        break;
      case FactorKind::Sphere2: {
        G(o, o) = S(r2);
        const S st = sin(q(o));
        G(o + 1, o + 1) = r2 * st * st;
        break;
      }
      case FactorKind::Sphere3: {
        G(o, o) = S(r2);
        const S ce = cos(q(o));
        const S se = sin(q(o));
        G(o + 1, o + 1) = r2 * ce * ce;
        G(o + 2, o + 2) = r2 * se * se;
        break;
      }
    }
  }
  return G;
}

MetricField factors_metric(std::vector<FactorSpec> fs, int n) {
  return MetricField([fs = std::move(fs), n](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    return product_metric_eval<S>(fs, n, q);
  });
}

// Wave-basis entries for one factor: restrictions of low-degree ambient
// polynomials, so every entry is smooth on the closed manifold.
void append_factor_waves(std::vector<WaveTerm>& basis, const FactorSpec& f) {
  const int o = f.offset;
  auto term = [&](std::vector<WaveFactor> ws) {
    basis.push_back(WaveTerm{1.0, std::move(ws)});
  };
  const double half = kPi / 2.0;
  switch (f.kind) {
    case FactorKind::Circle:
      term({{o, 1.0, 0.0}});
      term({{o, 1.0, -half}});
      term({{o, 2.0, 0.0}});
      term({{o, 2.0, -half}});
      break;
    case FactorKind::Torus:
      for (int i = 0; i < f.periods.size(); ++i) {
        const double w = kTwoPi / f.periods(i);
        term({{o + i, w, 0.0}});
        term({{o + i, w, -half}});
      }
      if (f.periods.size() >= 2) {
        const double w0 = kTwoPi / f.periods(0), w1 = kTwoPi / f.periods(1);
        term({{o, w0, 0.0}, {o + 1, w1, 0.0}});
      }
      break;
    case FactorKind::Sphere2:
      // ambient (x, y, z) = (sin t cos p, sin t sin p, cos t)
      term({{o, 1.0, 0.0}});                                  // z
      term({{o, 1.0, -half}, {o + 1, 1.0, 0.0}});             // x
      term({{o, 1.0, -half}, {o + 1, 1.0, -half}});           // y
      term({{o, 1.0, 0.0}, {o, 1.0, -half}, {o + 1, 1.0, 0.0}});  // xz
      term({{o, 1.0, -half}, {o, 1.0, -half}, {o + 1, 2.0, 0.0}});  // x^2 - y^2
      break;
    case FactorKind::Sphere3:
      // ambient (cos e cos u, cos e sin u, sin e cos v, sin e sin v)
      term({{o, 1.0, 0.0}, {o + 1, 1.0, 0.0}});
      term({{o, 1.0, 0.0}, {o + 1, 1.0, -half}});
      term({{o, 1.0, -half}, {o + 2, 1.0, 0.0}});
      term({{o, 1.0, -half}, {o + 2, 1.0, -half}});
      term({{o, 1.0, 0.0}, {o, 1.0, -half}, {o + 1, 1.0, 0.0}, {o + 2, 1.0, 0.0}});
      term({{o, 1.0, 0.0}, {o, 1.0, 0.0}, {o + 1, 2.0, 0.0}});  // w^2 - x^2
      term({{o, 1.0, -half}, {o, 1.0, -half}, {o + 2, 2.0, 0.0}});
      break;
  }
}

std::vector<WaveTerm> factors_waves(const std::vector<FactorSpec>& fs) {
  std::vector<WaveTerm> basis;
  std::vector<std::size_t> first_of;
  for (const auto& f : fs) {
    first_of.push_back(basis.size());
    append_factor_waves(basis, f);
  }
  // one cross product per consecutive factor pair keeps mixed derivatives
  // exercised without blowing up the basis
  for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
    WaveTerm cross;
    cross.coeff = 1.0;
    const WaveTerm& a = basis[first_of[i]];
    const WaveTerm& b = basis[first_of[i + 1]];
    cross.factors = a.factors;
    cross.factors.insert(cross.factors.end(), b.factors.begin(), b.factors.end());
    basis.push_back(std::move(cross));
  }
  return basis;
}

// Conformal flatness of the supported products: flat totals, single
// factors, and a 1-dimensional flat factor next to one round sphere.
bool product_is_lcf(const std::vector<FactorSpec>& fs) {
  bool all_flat = true;
  for (const auto& f : fs) all_flat = all_flat && f.flat();
  if (all_flat) return true;
  if (fs.size() == 1) return true;  // round spheres are conformally flat
  if (fs.size() == 2) {
    const auto is_line = [](const FactorSpec& f) { return f.flat() && f.dim() == 1; };
    const auto is_round = [](const FactorSpec& f) { return !f.flat(); };
    if ((is_line(fs[0]) && is_round(fs[1])) || (is_line(fs[1]) && is_round(fs[0])))
      return true;
  }
  return false;
}

ModelDescriptor build_product(const std::string& name,
                              const std::vector<FactorSpec>& fs) {
  ModelDescriptor m;
  m.name = name;
  m.domain = factors_domain(fs);
  m.metric = factors_metric(fs, m.domain.dim);

  m.volume = 1.0;
  double scal = 0.0;
  bool all_same_lambda = true;
  for (const auto& f : fs) {
    m.volume *= f.volume();
    scal += f.scalar();
    if (f.einstein_lambda() != fs.front().einstein_lambda()) all_same_lambda = false;
    ComponentInfo c;
    c.name = f.label();
    c.dim = f.dim();
    c.einstein_lambda = f.einstein_lambda();
    c.scalar = f.scalar();
    c.einstein = true;
    c.lcf = true;
    m.components.push_back(std::move(c));
  }
  m.scalar_curvature = scal;
  if (all_same_lambda) m.einstein_lambda = fs.front().einstein_lambda();
  m.lcf = product_is_lcf(fs);
  m.wave_basis = factors_waves(fs);
  return m;
}

// ------------------------------------------------------------ trig factor

TrigPoly parse_trig(ParamReader& reader, const ModelParams& params) {
  reader.mark_prefix("f.");
  TrigPoly tp;
  bool any = false;
  for (const auto& [key, value] : params) {
    if (key.rfind("f.", 0) != 0) continue;
    any = true;
    if (key == "f.const") {
      tp.c0 = parse_double(value, key);
      continue;
    }
    const auto parts = split(key, '.');
    if (parts.size() != 3 || (parts[1] != "sin" && parts[1] != "cos"))
      throw ConfigError("bad factor key '" + key + "' (use f.const, f.sin.K, f.cos.K)");
    const int freq = parse_int(parts[2], key);
    if (freq < 1) throw ConfigError("frequency in '" + key + "' must be >= 1");
    if (freq > 6) throw ConfigError("frequency in '" + key + "' exceeds 6");
    const double coeff = parse_double(value, key);
    if (parts[1] == "sin")
      tp.sin_terms.emplace_back(freq, coeff);
    else
      tp.cos_terms.emplace_back(freq, coeff);
  }
  if (!any) tp.sin_terms.emplace_back(1, 0.3);
  std::sort(tp.sin_terms.begin(), tp.sin_terms.end());
  std::sort(tp.cos_terms.begin(), tp.cos_terms.end());
  if (tp.amplitude() > 0.5)
    throw ConfigError("factor amplitude exceeds 0.5; the metric would be badly conditioned");
  return tp;
}

// Integral of e^{3f} over one period: Bessel closed form for a single
// harmonic, otherwise a dense trapezoid reference (machine precision for
// trigonometric exponents).
double warp_length(const TrigPoly& tp) {
  const std::size_t harmonics = tp.sin_terms.size() + tp.cos_terms.size();
  if (harmonics == 0) return kTwoPi * std::exp(3.0 * tp.c0);
  if (harmonics == 1) {
    const double a =
        tp.sin_terms.empty() ? tp.cos_terms[0].second : tp.sin_terms[0].second;
    return kTwoPi * std::exp(3.0 * tp.c0) * std::cyl_bessel_i(0.0, std::abs(3.0 * a));
  }
  const int nn = 4096;
  double acc = 0.0;
  for (int i = 0; i < nn; ++i)
    acc += std::exp(3.0 * tp(kTwoPi * i / nn));
  return acc * kTwoPi / nn;
}

// ------------------------------------------------------------- builders

ModelDescriptor make_circle(ParamReader& reader) {
  const double r = reader.get_double("r", 1.0);
  if (r <= 0.0) throw ConfigError("circle radius must be positive");
  FactorSpec f;
  f.kind = FactorKind::Circle;
  f.r = r;
  auto m = build_product("circle(r=" + fmt(r) + ")", {f});
  return m;
}

ModelDescriptor make_flat_torus(ParamReader& reader) {
  const int n = reader.get_int("n", 2);
  if (n < 1 || n > 4) throw ConfigError("flat_torus supports n in 1..4");
  FactorSpec f;
  f.kind = FactorKind::Torus;
  f.periods = Eigen::VectorXd::Constant(n, kTwoPi);
  if (reader.has("periods")) {
    const auto parts = split(reader.require("periods"), ',');
    if (static_cast<int>(parts.size()) != n)
      throw ConfigError("flat_torus needs exactly n periods");
    for (int i = 0; i < n; ++i) {
      f.periods(i) = parse_double(parts[static_cast<std::size_t>(i)], "period");
      if (f.periods(i) <= 0.0) throw ConfigError("periods must be positive");
    }
  }
  std::string label = "flat_torus(n=" + fmt(n) + ",periods=";
  for (int i = 0; i < n; ++i) label += (i ? "," : "") + fmt(f.periods(i));
  return build_product(label + ")", {f});
}

ModelDescriptor make_sphere(ParamReader& reader) {
  const int n = reader.get_int("n", 2);
  const double r = reader.get_double("r", 1.0);
  if (n != 2 && n != 3) throw ConfigError("sphere supports n = 2 or 3");
  if (r <= 0.0) throw ConfigError("sphere radius must be positive");
  FactorSpec f;
  f.kind = n == 2 ? FactorKind::Sphere2 : FactorKind::Sphere3;
  f.r = r;
  return build_product("sphere(n=" + fmt(n) + ",r=" + fmt(r) + ")", {f});
}

ModelDescriptor make_product(ParamReader& reader) {
  const auto fs = parse_factors(reader.require("factors"));
  if (fs.size() < 2) throw ConfigError("product needs at least two factors");
  std::string label = "product(";
  for (std::size_t i = 0; i < fs.size(); ++i)
    label += (i ? ";" : "") + fs[i].label();
  return build_product(label + ")", fs);
}

// Base/fibre split of a product along a factor boundary; the projection is
// the coordinate head map, so its differential is exact.
ModelDescriptor make_trivial_submersion(ParamReader& reader) {
  const auto fs = parse_factors(reader.require("factors"));
  const int nb = reader.get_int("split", fs.front().dim());

  std::string label = "trivial_submersion(";
  for (std::size_t i = 0; i < fs.size(); ++i) label += (i ? ";" : "") + fs[i].label();
  ModelDescriptor m = build_product(label + ",split=" + fmt(nb) + ")", fs);

  const int n = m.domain.dim;
  const int nf = n - nb;
  if (nb < 1 || nb >= n)
    throw ConfigError("split must leave at least one coordinate on each side");

  // The base is the head of the coordinate list. A factor may straddle the
  // boundary only when its metric block is constant, i.e. a torus.
  std::vector<FactorSpec> base_fs, fibre_fs;
  int off = 0;
  for (const auto& f : fs) {
    const int d = f.dim();
    if (off + d <= nb) {
      base_fs.push_back(f);
    } else if (off >= nb) {
      fibre_fs.push_back(f);
    } else {
      if (f.kind != FactorKind::Torus)
        throw ConfigError(
            "split cuts a curved factor; only torus factors may straddle");
      FactorSpec head = f, tail = f;
      head.periods = f.periods.head(nb - off).eval();
      tail.periods = f.periods.tail(d - (nb - off)).eval();
      base_fs.push_back(head);
      fibre_fs.push_back(tail);
    }
    off += d;
  }
  off = 0;
  for (auto& f : base_fs) {
    f.offset = off;
    off += f.dim();
  }
  off = 0;
  for (auto& f : fibre_fs) {
    f.offset = off;
    off += f.dim();
  }

  SubmersionSpec s;
  s.total_domain = m.domain;
  s.total_metric = m.metric;
  s.base_domain = factors_domain(base_fs);
  s.base_metric = factors_metric(base_fs, nb);
  s.projection = MapField([nb](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    VecS<S> out(nb);
    for (int i = 0; i < nb; ++i) out(i) = q(i);
    return out;
  });
  s.jacobian = MapField([nb, n](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    VecS<S> out(nb * n);
    for (int i = 0; i < nb * n; ++i) out(i) = S(0.0);
    for (int a = 0; a < nb; ++a) out(a * n + a) = S(1.0);
    (void)q;
    return out;
  });
  for (int c = nb; c < n; ++c) s.fibre_coords.push_back(c);
  const ChartDomain fibre_dom = factors_domain(fibre_fs);
  const MetricField fibre_metric = factors_metric(fibre_fs, nf);
  s.fibre_chart = [fibre_dom, fibre_metric, nb, nf](const Eigen::VectorXd& p) {
    FibreChart fc;
    fc.domain = fibre_dom;
    fc.metric = fibre_metric;
    fc.point = p.segment(nb, nf);
    return fc;
  };
  m.has_submersion = true;
  m.submersion = std::move(s);

  off = 0;
  for (auto& c : m.components) {
    const int overlap = std::clamp(nb - off, 0, c.dim);
    c.h_dim = overlap;
    c.v_dim = c.dim - overlap;
    off += c.dim;
  }
  bool fibre_same_lambda = true;
  for (const auto& f : fibre_fs)
    if (f.einstein_lambda() != fibre_fs.front().einstein_lambda())
      fibre_same_lambda = false;
  if (fibre_same_lambda)
    m.fibre_einstein_lambda = fibre_fs.front().einstein_lambda();
  return m;
}

ModelDescriptor make_hopf(ParamReader& reader) {
  const double r = reader.get_double("r", 1.0);
  if (r <= 0.0) throw ConfigError("hopf radius must be positive");
  // rescale = c shrinks the base metric by e^{-2c}, turning the projection
  // into a conformal submersion with constant factor c.
  const double c = reader.get_double("rescale", 0.0);
  FactorSpec total;
  total.kind = FactorKind::Sphere3;
  total.r = r;
  std::string name = "hopf(r=" + fmt(r) + ")";
  if (c != 0.0) name = "hopf(r=" + fmt(r) + ",rescale=" + fmt(c) + ")";
  ModelDescriptor m = build_product(name, {total});
  m.name = name;

  FactorSpec base;
  base.kind = FactorKind::Sphere2;
  base.r = r / 2.0;

  SubmersionSpec s;
  s.total_domain = m.domain;
  s.total_metric = m.metric;
  s.base_domain = factors_domain({base});
  const MetricField round_base = factors_metric({base}, 2);
  if (c == 0.0) {
    s.base_metric = round_base;
  } else {
    const double bscale = std::exp(-2.0 * c);
    s.base_metric = MetricField([round_base, bscale](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      auto G = round_base(q);
      for (int i = 0; i < G.rows(); ++i)
        for (int j = 0; j < G.cols(); ++j) G(i, j) = G(i, j) * S(bscale);
      return G;
    });
    s.conformal_factor = ScalarField([c](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      (void)q;
      return S(c);
    });
  }
  s.projection = MapField([](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    VecS<S> out(2);
    out(0) = 2.0 * q(0);
    out(1) = q(2) - q(1);
    return out;
  });
  s.jacobian = MapField([](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    VecS<S> out(6);
    for (int i = 0; i < 6; ++i) out(i) = S(0.0);
    out(0) = S(2.0);
    out(4) = S(-1.0);
    out(5) = S(1.0);
    (void)q;
    return out;
  });
  // fibres are not coordinate boxes; one-dimensional, so their intrinsic
  // curvature is zero and no chart is needed
  m.has_submersion = true;
  m.submersion = std::move(s);
  m.fibre_einstein_lambda = 0.0;
  m.components[0].h_dim = 2;
  m.components[0].v_dim = 1;
  return m;
}

ModelDescriptor make_warped(ParamReader& reader, const ModelParams& params) {
  const TrigPoly tp = parse_trig(reader, params);
  const std::string onto = reader.get_string("onto", "sphere");
  if (onto != "sphere" && onto != "circle")
    throw ConfigError("warped_s1_s3 parameter 'onto' must be sphere or circle");

  FactorSpec circle;
  circle.kind = FactorKind::Circle;
  FactorSpec sphere3;
  sphere3.kind = FactorKind::Sphere3;
  sphere3.offset = 1;

  ModelDescriptor m;
  m.name = "warped_s1_s3(onto=" + onto + ")";
  m.domain = factors_domain({circle, sphere3});
  m.metric = MetricField([tp](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    using std::cos;
    using std::exp;
    using std::sin;
    MatS<S> G(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) G(i, j) = S(0.0);
    G(0, 0) = S(1.0);
    const S w = exp(2.0 * tp(q(0)));
    const S ce = cos(q(1));
    const S se = sin(q(1));
    G(1, 1) = w;
    G(2, 2) = w * ce * ce;
    G(3, 3) = w * se * se;
    return G;
  });
  // unit 3-sphere volume times the warped circle length
  m.volume = 2.0 * kPi * kPi * warp_length(tp);
  m.lcf = true;
  m.wave_basis = factors_waves({circle, sphere3});
  // e^{3f} needs trapezoid resolution past the top harmonic of f; the sphere
  // directions are exact at the default count.
  int kmax = 1;
  for (const auto& [freq, coeff] : tp.sin_terms) kmax = std::max(kmax, freq);
  for (const auto& [freq, coeff] : tp.cos_terms) kmax = std::max(kmax, freq);
  m.verify_nodes = {12 * kmax, 8, 8, 8};

  SubmersionSpec s;
  s.total_domain = m.domain;
  s.total_metric = m.metric;
  if (onto == "sphere") {
    s.base_domain = factors_domain({FactorSpec{FactorKind::Sphere3, 1.0, {}, 0}});
    s.base_metric = factors_metric({FactorSpec{FactorKind::Sphere3, 1.0, {}, 0}}, 3);
    s.projection = MapField([](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      VecS<S> out(3);
      for (int i = 0; i < 3; ++i) out(i) = q(i + 1);
      return out;
    });
    s.jacobian = MapField([](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      VecS<S> out(12);
      for (int i = 0; i < 12; ++i) out(i) = S(0.0);
      out(0 * 4 + 1) = S(1.0);
      out(1 * 4 + 2) = S(1.0);
      out(2 * 4 + 3) = S(1.0);
      (void)q;
      return out;
    });
    s.conformal_factor = ScalarField([tp](const auto& q) { return tp(q(0)); });
    s.fibre_coords = {0};
    const ChartDomain circ_dom = factors_domain({circle});
    s.fibre_chart = [circ_dom](const Eigen::VectorXd& p) {
      FibreChart fc;
      fc.domain = circ_dom;
      fc.metric = MetricField([](const auto& q) {
        using S = typename std::decay_t<decltype(q)>::Scalar;
        MatS<S> g(1, 1);
        g(0, 0) = S(1.0);
        (void)q;
        return g;
      });
      fc.point = p.head(1);
      return fc;
    };
    m.fibre_einstein_lambda = 0.0;
  } else {
    s.base_domain = factors_domain({circle});
    s.base_metric = MetricField([](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      MatS<S> g(1, 1);
      g(0, 0) = S(1.0);
      (void)q;
      return g;
    });
    s.projection = MapField([](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      VecS<S> out(1);
      out(0) = q(0);
      return out;
    });
    s.jacobian = MapField([](const auto& q) {
      using S = typename std::decay_t<decltype(q)>::Scalar;
      VecS<S> out(4);
      out(0) = S(1.0);
      for (int i = 1; i < 4; ++i) out(i) = S(0.0);
      (void)q;
      return out;
    });
    s.fibre_coords = {1, 2, 3};
    const ChartDomain s3_dom = factors_domain({FactorSpec{FactorKind::Sphere3, 1.0, {}, 0}});
    s.fibre_chart = [s3_dom, tp](const Eigen::VectorXd& p) {
      FibreChart fc;
      fc.domain = s3_dom;
      const double w = std::exp(2.0 * tp(p(0)));
      fc.metric = MetricField([w](const auto& q) {
        using S = typename std::decay_t<decltype(q)>::Scalar;
        using std::cos;
        using std::sin;
        MatS<S> g(3, 3);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) g(i, j) = S(0.0);
        const S ce = cos(q(0));
        const S se = sin(q(0));
        g(0, 0) = S(w);
        g(1, 1) = w * ce * ce;
        g(2, 2) = w * se * se;
        return g;
      });
      fc.point = p.tail(3);
      return fc;
    };
  }
  m.has_submersion = true;
  m.submersion = std::move(s);
  return m;
}

// ----------------------------------------------------------- verification

int verification_nodes(int dim) {
  if (dim <= 2) return 32;
  if (dim == 3) return 20;
  if (dim == 4) return 12;
  return 8;
}

}  // namespace

double TrigPoly::amplitude() const {
  double a = std::abs(c0);
  for (const auto& [k, v] : sin_terms) {
    (void)k;
    a += std::abs(v);
  }
  for (const auto& [k, v] : cos_terms) {
    (void)k;
    a += std::abs(v);
  }
  return a;
}

void verify_model(const ModelDescriptor& m) {
  m.domain.validate();
  if (m.metric.empty()) throw ModelError(m.name + ": missing metric");

  const QuadratureGrid grid =
      m.verify_nodes.empty()
          ? build_grid(m.domain, m.metric, verification_nodes(m.domain.dim))
          : build_grid(m.domain, m.metric, m.verify_nodes);
  const double vol = volume(grid);
  if (std::abs(vol - m.volume) > 1e-6 * std::max(1.0, std::abs(m.volume)))
    throw ModelError(m.name + ": volume mismatch, quadrature " + fmt(vol) +
                     " vs stated " + fmt(m.volume));

  int total_comp_dim = 0, total_h = 0, total_v = 0;
  for (const auto& c : m.components) {
    total_comp_dim += c.dim;
    total_h += c.h_dim;
    total_v += c.v_dim;
    if (c.einstein && std::abs(c.scalar - c.dim * c.einstein_lambda) > 1e-12)
      throw ModelError(m.name + ": component '" + c.name +
                       "' scalar inconsistent with its Einstein constant");
  }
  if (!m.components.empty() && total_comp_dim != m.domain.dim)
    throw ModelError(m.name + ": component dimensions do not sum to the total");

  const Eigen::MatrixXd pts = halton_points(m.domain, 5, 0);
  for (int k = 0; k < pts.cols(); ++k) {
    const CurvatureBundle b = curvature_bundle(m.metric, pts.col(k));
    if (m.scalar_curvature) {
      const double want = *m.scalar_curvature;
      if (std::abs(b.scalar - want) > 1e-6 * std::max(1.0, std::abs(want)))
        throw ModelError(m.name + ": scalar curvature mismatch, " + fmt(b.scalar) +
                         " vs stated " + fmt(want));
    }
    if (m.einstein_lambda) {
      const double lam = *m.einstein_lambda;
      const double defect =
          (b.ricci.matrix() - lam * b.jets.G).cwiseAbs().maxCoeff();
      if (defect > 1e-6 * std::max(1.0, std::abs(lam)))
        throw ModelError(m.name + ": Einstein defect " + fmt(defect));
    }
    if (m.lcf && m.domain.dim >= 4 && k < 3) {
      const double w = weyl_tensor(b).max_abs();
      if (w > 1e-6)
        throw ModelError(m.name + ": stated conformally flat but Weyl reaches " +
                         fmt(w));
    }
  }

  if (m.has_submersion) {
    m.submersion.validate();
    if (m.submersion.total_dim() != m.domain.dim)
      throw ModelError(m.name + ": submersion total dimension mismatch");
    if (!m.components.empty()) {
      if (total_h != m.submersion.base_dim() || total_v != m.submersion.fibre_dim())
        throw ModelError(m.name + ": component h/v dimensions do not match the split");
    }
    const double cc = conformal_check(m.submersion, halton_points(m.domain, 5, 1));
    if (cc > 1e-9)
      throw ModelError(m.name + ": conformal compatibility residual " + fmt(cc));
    if (m.fibre_einstein_lambda && m.submersion.fibre_chart &&
        m.submersion.fibre_dim() >= 2) {
      const double lam = *m.fibre_einstein_lambda;
      for (int k = 0; k < 2; ++k) {
        const FibreChart fc = m.submersion.fibre_chart(pts.col(k));
        const Eigen::MatrixXd fp = halton_points(fc.domain, 2, 0);
        for (int i = 0; i < fp.cols(); ++i) {
          const CurvatureBundle fb = curvature_bundle(fc.metric, fp.col(i));
          const double defect =
              (fb.ricci.matrix() - lam * fb.jets.G).cwiseAbs().maxCoeff();
          if (defect > 1e-6 * std::max(1.0, std::abs(lam)))
            throw ModelError(m.name + ": fibre Einstein defect " + fmt(defect));
        }
      }
    }
  }
}

ModelDescriptor make_model(const std::string& name, const ModelParams& params) {
  ParamReader reader(params);
  ModelDescriptor m;
  if (name == "circle") {
    m = make_circle(reader);
  } else if (name == "flat_torus") {
    m = make_flat_torus(reader);
  } else if (name == "sphere") {
    m = make_sphere(reader);
  } else if (name == "product") {
    m = make_product(reader);
  } else if (name == "warped_s1_s3") {
    m = make_warped(reader, params);
  } else if (name == "hopf") {
    m = make_hopf(reader);
  } else if (name == "trivial_submersion") {
    m = make_trivial_submersion(reader);
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }
  reader.finish();
  verify_model(m);
  return m;
}

std::vector<std::pair<std::string, std::string>> builtin_models() {
  return {
      {"circle", "flat circle; r (radius, default 1)"},
      {"flat_torus", "flat torus; n (1..4, default 2), periods (comma list, default 2pi each)"},
      {"sphere", "round sphere; n (2 or 3, default 2), r (radius, default 1)"},
      {"product", "metric product; factors (semicolon list of circle(r), torus(L,...), sphere2(r), sphere3(r))"},
      {"warped_s1_s3",
       "circle times 3-sphere with fibre scaling e^{2f}; f.const / f.sin.K / f.cos.K "
       "(trig polynomial, default f = 0.3 sin x, amplitude capped at 0.5), onto (sphere or circle)"},
      {"hopf",
       "Hopf circle bundle over the half-radius 2-sphere; r (default 1), "
       "rescale (constant conformal factor, default 0)"},
      {"trivial_submersion",
       "coordinate projection of a product onto its leading coordinates; factors (as "
       "product), split (coordinates in the base, default first factor; only torus "
       "factors may straddle the boundary)"},
  };
}

ScalarField seeded_scalar(const ModelDescriptor& m, unsigned seed) {
  std::vector<WaveTerm> terms = m.wave_basis;
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i].coeff =
        2.0 * radical_inverse(1 + static_cast<long long>(seed) * 64 +
                                  static_cast<long long>(i),
                              5) -
        1.0;
  return ScalarField([terms](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    return eval_waves<S>(terms, q);
  });
}

VectorField seeded_gradient_field(const ModelDescriptor& m, unsigned sd) {
  std::vector<WaveTerm> terms = m.wave_basis;
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i].coeff =
        2.0 * radical_inverse(1 + static_cast<long long>(sd) * 64 +
                                  static_cast<long long>(i),
                              5) -
        1.0;
  return VectorField([g = m.metric, terms](const auto& q) {
    using S = typename std::decay_t<decltype(q)>::Scalar;
    const auto lifted = subcurv::seed(q);
    const auto h = eval_waves(terms, lifted);
    const int n = static_cast<int>(q.size());
    VecS<S> dh(n);
    for (int j = 0; j < n; ++j) dh(j) = partial(h, j);
    const MatS<S> G = g(q);
    return matvec<S>(inverse_of(G), dh);
  });
}

}  // namespace subcurv
