#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "subcurv/chart.hpp"
#include "subcurv/models.hpp"

namespace subcurv {

// One numerically checked hypothesis of a rigidity criterion. Discrete
// conditions (dimension counts, metadata presence) report residual 0 or 1.
struct HypothesisStatus {
  std::string name;
  bool satisfied = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string note;
};

// Verdict of one theorem's criterion on one model. rigid-consistent means
// every hypothesis holds and the criterion balances within tolerance;
// violated means the hypotheses hold but the balance fails; not-applicable
// means some hypothesis fails, with `reason` naming the first one.
struct CriterionReport {
  std::string theorem_id;
  std::vector<HypothesisStatus> hypotheses;
  bool applicable = false;
  double criterion_left = 0.0;
  double criterion_right = 0.0;
  double criterion_residual = 0.0;
  std::string verdict;
  std::string reason;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::map<std::string, double> terms;
};

struct CriteriaOptions {
  int points = 50;     // sample count for pointwise hypothesis maxima
  int norm_nodes = 8;  // per-coordinate quadrature nodes for the mean norms
  unsigned seed = 0;
  double hypothesis_tol = 1e-6;
  double criterion_tol = 1e-6;
};

// Max componentwise residual of Ric + Hess(h) - dh (x) dh / m - lambda g
// over the sample points (columns). m_infinite drops the dh (x) dh term and
// ignores m; otherwise m must be positive (PreconditionError).
double quasi_einstein_residual(const MetricField& g, const ScalarField& h,
                               double m, double lambda,
                               const Eigen::MatrixXd& points,
                               bool m_infinite = false);

// Theorem ids the evaluator understands, in report order.
const std::vector<std::string>& criterion_ids();

// Hypothesis checklist and criterion equation of one theorem, as fixed
// text. Unknown ids throw ConfigError.
std::string describe_theorem(const std::string& theorem_id);

// Evaluate one theorem's criterion on a built-in model. Pointwise
// hypothesis residuals are maximized over `points` samples; the norms
// entering criterion equations are quadrature means over the whole model,
// with a warning whenever a norm is not spatially constant.
CriterionReport evaluate_criterion(const std::string& theorem_id,
                                   const ModelDescriptor& model,
                                   const CriteriaOptions& opts = {});

// Every theorem in criterion_ids() order.
std::vector<CriterionReport> evaluate_all_criteria(const ModelDescriptor& model,
                                                   const CriteriaOptions& opts = {});

}  // namespace subcurv
