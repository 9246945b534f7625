#include "subcurv/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

#include "subcurv/criteria.hpp"
#include "subcurv/errors.hpp"
#include "subcurv/identities.hpp"
#include "subcurv/quadrature.hpp"
#include "subcurv/version.hpp"

namespace subcurv {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long out = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError("value for '" + key + "' is not an integer: " + v);
  return static_cast<int>(out);
}

double parse_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError("value for '" + key + "' is not a number: " + v);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct Accounting {
  int run = 0;
  int passed = 0;
  std::string first_failure;

  void record(bool ok, const std::string& label) {
    ++run;
    if (ok) {
      ++passed;
    } else if (first_failure.empty()) {
      first_failure = label;
    }
  }
};

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::Array{};
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json terms_json(const std::map<std::string, double>& terms) {
  Json t = Json::Object{};
  for (const auto& [k, v] : terms) t[k] = v;
  return t;
}

Json string_array(const std::vector<std::string>& v) {
  Json a = Json::Array{};
  for (const auto& s : v) a.push_back(s);
  return a;
}

Json identity_json(const IdentityReport& r, const std::string& suite,
                   bool passed) {
  Json j;
  j["applicable"] = r.applicable;
  j["identity_id"] = r.identity_id;
  j["max_residual"] = r.max_residual;
  j["passed"] = passed;
  Json pp = Json::Array{};
  for (const auto& p : r.per_point) {
    Json e;
    e["point"] = vec_json(p.point);
    e["residual"] = p.residual;
    pp.push_back(std::move(e));
  }
  j["per_point"] = std::move(pp);
  j["points_checked"] = r.points_checked;
  j["reason"] = r.reason;
  j["suite"] = suite;
  j["terms"] = terms_json(r.terms);
  return j;
}

Json criterion_json(const CriterionReport& r, const std::string& suite,
                    bool passed) {
  Json j;
  j["applicable"] = r.applicable;
  j["criterion_left"] = r.criterion_left;
  j["criterion_residual"] = r.criterion_residual;
  j["criterion_right"] = r.criterion_right;
  Json hs = Json::Array{};
  for (const auto& h : r.hypotheses) {
    Json e;
    e["name"] = h.name;
    e["note"] = h.note;
    e["residual"] = h.residual;
    e["satisfied"] = h.satisfied;
    e["tolerance"] = h.tolerance;
    hs.push_back(std::move(e));
  }
  j["hypotheses"] = std::move(hs);
  j["notes"] = string_array(r.notes);
  j["passed"] = passed;
  j["reason"] = r.reason;
  j["suite"] = suite;
  j["terms"] = terms_json(r.terms);
  j["theorem_id"] = r.theorem_id;
  j["verdict"] = r.verdict;
  j["warnings"] = string_array(r.warnings);
  return j;
}

Json model_json(const ModelDescriptor& m) {
  Json j;
  j["dim"] = m.domain.dim;
  j["name"] = m.name;
  j["has_submersion"] = m.has_submersion;
  j["base_dim"] =
      m.has_submersion ? Json(m.submersion.base_dim()) : Json(nullptr);
  j["fibre_dim"] =
      m.has_submersion ? Json(m.submersion.fibre_dim()) : Json(nullptr);
  j["volume"] = m.volume;
  j["scalar_curvature"] =
      m.scalar_curvature ? Json(*m.scalar_curvature) : Json(nullptr);
  j["einstein_lambda"] =
      m.einstein_lambda ? Json(*m.einstein_lambda) : Json(nullptr);
  j["fibre_einstein_lambda"] = m.fibre_einstein_lambda
                                   ? Json(*m.fibre_einstein_lambda)
                                   : Json(nullptr);
  j["locally_conformally_flat"] = m.lcf;
  Json comps = Json::Array{};
  for (const auto& c : m.components) {
    Json e;
    e["dim"] = c.dim;
    e["einstein"] = c.einstein;
    e["einstein_lambda"] = c.einstein_lambda;
    e["h_dim"] = c.h_dim;
    e["locally_conformally_flat"] = c.lcf;
    e["name"] = c.name;
    e["scalar"] = c.scalar;
    e["v_dim"] = c.v_dim;
    comps.push_back(std::move(e));
  }
  j["components"] = std::move(comps);
  return j;
}

Json config_json(const RunConfig& cfg) {
  Json j;
  j["grid"] = cfg.grid;
  Json model;
  model["name"] = cfg.model_name;
  Json params = Json::Object{};
  for (const auto& [k, v] : cfg.model_params) params[k] = v;
  model["params"] = std::move(params);
  j["model"] = std::move(model);
  j["output"] = cfg.output.empty() ? std::string("-") : cfg.output;
  j["points"] = cfg.points;
  j["seed"] = cfg.seed;
  j["suites"] = string_array(cfg.suites);
  Json tol;
  tol["criterion"] = cfg.tol_criterion;
  tol["divergence"] = cfg.tol_divergence;
  tol["hypothesis"] = cfg.tol_hypothesis;
  tol["identity"] = cfg.tol_identity;
  j["tolerance"] = std::move(tol);
  return j;
}

std::string fmt_double(double d) { return json_number(d); }

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "structural", "riemannian",     "conformal", "lcf",
      "criteria",   "quasi_einstein", "divergence"};
  return names;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool have_model = false, have_suites = false;

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError("duplicate configuration key: " + key);

    if (key == "model.name") {
      if (value.empty()) throw ConfigError("model.name must not be empty");
      cfg.model_name = value;
      have_model = true;
    } else if (key.rfind("model.params.", 0) == 0) {
      const std::string pkey = key.substr(std::string("model.params.").size());
      if (pkey.empty())
        throw ConfigError("empty model parameter name in '" + key + "'");
      cfg.model_params[pkey] = value;
    } else if (key == "suites") {
      std::set<std::string> wanted;
      for (const auto& s : split_list(value)) {
        if (s.empty()) throw ConfigError("empty entry in 'suites'");
        if (std::find(suite_names().begin(), suite_names().end(), s) ==
            suite_names().end())
          throw ConfigError("unknown suite: " + s);
        if (!wanted.insert(s).second)
          throw ConfigError("suite listed twice: " + s);
      }
      for (const auto& s : suite_names())
        if (wanted.count(s)) cfg.suites.push_back(s);
      have_suites = true;
    } else if (key == "points") {
      cfg.points = parse_int(value, key);
      if (cfg.points < 1) throw ConfigError("points must be >= 1");
    } else if (key == "grid") {
      cfg.grid = parse_int(value, key);
      if (cfg.grid < 8) throw ConfigError("grid must be >= 8");
    } else if (key == "seed") {
      cfg.seed = parse_int(value, key);
      if (cfg.seed < 0) throw ConfigError("seed must be >= 0");
    } else if (key == "tolerance.identity") {
      cfg.tol_identity = parse_double(value, key);
      if (cfg.tol_identity <= 0.0) throw ConfigError(key + " must be > 0");
    } else if (key == "tolerance.hypothesis") {
      cfg.tol_hypothesis = parse_double(value, key);
      if (cfg.tol_hypothesis <= 0.0) throw ConfigError(key + " must be > 0");
    } else if (key == "tolerance.criterion") {
      cfg.tol_criterion = parse_double(value, key);
      if (cfg.tol_criterion <= 0.0) throw ConfigError(key + " must be > 0");
    } else if (key == "tolerance.divergence") {
      cfg.tol_divergence = parse_double(value, key);
      if (cfg.tol_divergence <= 0.0) throw ConfigError(key + " must be > 0");
    } else if (key == "output") {
      cfg.output = value;
    } else {
      throw ConfigError("unknown configuration key: " + key);
    }
  }
  if (!have_model) throw ConfigError("missing required key: model.name");
  if (!have_suites || cfg.suites.empty())
    throw ConfigError("missing required key: suites");
  return cfg;
}

Json conventions_block() {
  Json j;
  j["curvature_sign"] =
      "R(X,Y,Z,W) = g(nabla_Y nabla_X Z - nabla_X nabla_Y Z + "
      "nabla_[X,Y] Z, W); the unit round 2-sphere has K = +1";
  j["ricci"] =
      "Ric is the metric trace of R over the first and third slots; "
      "Ric = (n-1) g on the unit round n-sphere";
  j["scalar"] = "s = trace_g Ric";
  j["divergence"] =
      "div X = sum_i g(nabla_{e_i} X, e_i) over an orthonormal frame, "
      "no minus sign";
  j["hessian"] = "Hess(h)_ij = d_i d_j h - Gamma^k_ij d_k h";
  j["laplacian"] = "Delta h = trace_g Hess(h); Delta cos(theta) = "
                   "-2 cos(theta) on the unit 2-sphere";
  j["kulkarni_nomizu"] =
      "(a o b)(X,Y,Z,W) = a(X,Z)b(Y,W) + a(Y,W)b(X,Z) - a(X,W)b(Y,Z) "
      "- a(Y,Z)b(X,W)";
  j["fundamental_tensors"] =
      "T and A are the fundamental tensors of the rescaled metric "
      "exp(-2f) g; the horizontal and vertical projections agree for "
      "both metrics";
  j["tensor_norms"] =
      "|T|^2 = sum_{j,k} |T_{U_j} U_k|_g^2 and |A|^2 = sum_{i,j} "
      "|A_{X_i} X_j|_g^2 over g-orthonormal frames; N = sum_j T_{U_j} U_j";
  j["tensor_derivatives"] =
      "covariant derivatives of T, A and N inside curvature relations "
      "use the total metric's connection; parallel-tensor hypothesis "
      "rows use the rescaled metric's own connection";
  j["fibre_curvature"] =
      "fibre curvature quantities refer to the metric the total space "
      "induces on the fibre";
  j["quadrature"] =
      "periodic coordinates integrate with the trapezoid rule; "
      "polar-type coordinates with Gauss-Legendre in the cosine "
      "substitution";
  j["sampling"] =
      "sample points come from the Halton sequence over the interior "
      "sample box; the seed offsets the sequence start";
  return j;
}

std::string list_models_text() {
  std::ostringstream os;
  for (const auto& [name, desc] : builtin_models())
    os << name << "\n    " << desc << "\n";
  return os.str();
}

RunOutcome execute_run(const RunConfig& cfg, const ModelDescriptor& model) {
  Accounting acc;
  Json identities = Json::Array{};
  Json criteria = Json::Array{};
  Json divergence = nullptr;
  Json errors = Json::Array{};

  const auto wanted = [&](const std::string& s) {
    return std::find(cfg.suites.begin(), cfg.suites.end(), s) !=
           cfg.suites.end();
  };

  const auto record_identity = [&](const IdentityReport& r,
                                   const std::string& suite) {
    const bool ok = !r.applicable || r.max_residual <= cfg.tol_identity;
    acc.record(ok, "identity " + r.identity_id + " (" + suite +
                       "): max residual " + fmt_double(r.max_residual) +
                       " exceeds " + fmt_double(cfg.tol_identity));
    identities.push_back(identity_json(r, suite, ok));
  };

  const auto suite_error = [&](const std::string& suite,
                               const std::string& message) {
    acc.record(false, "suite " + suite + ": " + message);
    Json e;
    e["message"] = message;
    e["suite"] = suite;
    errors.push_back(std::move(e));
  };

  const auto no_submersion = [&](const std::string& suite) {
    IdentityReport r;
    r.identity_id = suite;
    r.applicable = false;
    r.reason = "model has no submersion structure";
    record_identity(r, suite);
  };

  const unsigned seed = static_cast<unsigned>(cfg.seed);

  for (const auto& suite : cfg.suites) {
    if (suite == "structural") {
      if (!model.has_submersion) {
        no_submersion(suite);
        continue;
      }
      try {
        record_identity(verify_structural(model.submersion, cfg.points, seed),
                        suite);
      } catch (const Error& e) {
        suite_error(suite, e.what());
      }
    } else if (suite == "riemannian") {
      if (!model.has_submersion) {
        no_submersion(suite);
        continue;
      }
      try {
        for (const auto& r :
             verify_riemannian_formulas(model.submersion, cfg.points, seed))
          record_identity(r, suite);
      } catch (const Error& e) {
        suite_error(suite, e.what());
      }
    } else if (suite == "conformal") {
      if (!model.has_submersion) {
        no_submersion(suite);
        continue;
      }
      try {
        for (const auto& r :
             verify_conformal_curvature(model.submersion, cfg.points, seed))
          record_identity(r, suite);
      } catch (const Error& e) {
        suite_error(suite, e.what());
      }
    } else if (suite == "lcf") {
      if (!model.has_submersion) {
        no_submersion(suite);
        continue;
      }
      try {
        for (const auto& r : verify_lcf_identities(
                 model.submersion, cfg.points, seed, model.components))
          record_identity(r, suite);
      } catch (const Error& e) {
        suite_error(suite, e.what());
      }
    } else if (suite == "criteria" || suite == "quasi_einstein") {
      // both handled after the loop so one shared evaluation serves them
    } else if (suite == "divergence") {
      try {
        const QuadratureGrid grid =
            build_grid(model.domain, model.metric, cfg.grid);
        std::vector<VectorField> fields;
        for (int k = 0; k < 10; ++k)
          fields.push_back(seeded_gradient_field(model, seed + k));
        const std::vector<double> resid =
            divergence_theorem_residuals(grid, fields);
        Json dj;
        Json rj = Json::Array{};
        double worst = 0.0;
        for (std::size_t k = 0; k < resid.size(); ++k) {
          const bool ok = resid[k] < cfg.tol_divergence;
          acc.record(ok, "divergence field " + std::to_string(k) +
                             ": residual " + fmt_double(resid[k]) +
                             " exceeds " + fmt_double(cfg.tol_divergence));
          rj.push_back(resid[k]);
          worst = std::max(worst, resid[k]);
        }
        dj["fields"] = static_cast<long long>(resid.size());
        dj["grid"] = cfg.grid;
        dj["max_residual"] = worst;
        dj["passed"] = worst < cfg.tol_divergence;
        dj["residuals"] = std::move(rj);
        divergence = std::move(dj);
      } catch (const Error& e) {
        suite_error(suite, e.what());
      }
    }
  }

  if (wanted("criteria") || wanted("quasi_einstein")) {
    CriteriaOptions copts;
    copts.points = cfg.points;
    copts.seed = static_cast<unsigned>(cfg.seed);
    copts.hypothesis_tol = cfg.tol_hypothesis;
    copts.criterion_tol = cfg.tol_criterion;
    const auto record_criterion = [&](const CriterionReport& r,
                                      const std::string& suite) {
      const bool ok = r.verdict != "violated";
      acc.record(ok, "criterion " + r.theorem_id + ": violated (residual " +
                         fmt_double(r.criterion_residual) + ")");
      criteria.push_back(criterion_json(r, suite, ok));
    };
    try {
      if (wanted("criteria")) {
        for (const auto& r : evaluate_all_criteria(model, copts)) {
          if (r.theorem_id == "QE") {
            if (wanted("quasi_einstein"))
              record_criterion(r, "quasi_einstein");
          } else {
            record_criterion(r, "criteria");
          }
        }
      } else {
        record_criterion(evaluate_criterion("QE", model, copts),
                         "quasi_einstein");
      }
    } catch (const Error& e) {
      suite_error(wanted("criteria") ? "criteria" : "quasi_einstein",
                  e.what());
    }
  }

  Json report;
  report["config"] = config_json(cfg);
  report["conventions"] = conventions_block();
  report["criteria"] = std::move(criteria);
  report["divergence"] = std::move(divergence);
  report["errors"] = std::move(errors);
  report["identities"] = std::move(identities);
  report["model"] = model_json(model);
  report["schema_version"] = kReportSchemaVersion;
  Json summary;
  summary["checks_failed"] = acc.run - acc.passed;
  summary["checks_passed"] = acc.passed;
  summary["checks_run"] = acc.run;
  summary["first_failure"] = acc.first_failure;
  summary["status"] = acc.run == acc.passed ? "pass" : "fail";
  report["summary"] = std::move(summary);
  report["version"] = kToolVersion;

  RunOutcome out;
  out.passed = acc.run == acc.passed;
  out.first_failure = acc.first_failure;
  out.checks_run = acc.run;
  out.checks_passed = acc.passed;
  out.report = report.dump();
  return out;
}

}  // namespace subcurv
