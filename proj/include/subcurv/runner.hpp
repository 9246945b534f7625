#pragma once

#include <map>
#include <string>
#include <vector>

#include "subcurv/models.hpp"
#include "subcurv/report.hpp"

namespace subcurv {

// A parsed run configuration. The file format is flat `key = value` lines;
// see parse_run_config for the grammar.
struct RunConfig {
  std::string model_name;
  std::map<std::string, std::string> model_params;
  std::vector<std::string> suites;  // validated, canonical order
  int points = 50;
  int grid = 64;
  int seed = 0;
  double tol_identity = 1e-6;
  double tol_hypothesis = 1e-6;
  double tol_criterion = 1e-6;
  double tol_divergence = 1e-4;
  std::string output;  // report path; empty or "-" means stdout
};

// Canonical suite execution order.
const std::vector<std::string>& suite_names();

// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
// Keys: model.name (required), model.params.<key>, suites (required,
// comma-separated subset of suite_names()), points (>= 1), grid (>= 8),
// seed, tolerance.identity, tolerance.hypothesis, tolerance.criterion,
// tolerance.divergence, output. Unknown or duplicate keys, malformed
// values, and out-of-range numbers all throw ConfigError.
RunConfig parse_run_config(const std::string& text);

struct RunOutcome {
  bool passed = true;
  std::string first_failure;  // empty when passed
  int checks_run = 0;
  int checks_passed = 0;
  std::string report;  // the full JSON document
};

// Execute the configured suites against an already-constructed model and
// assemble the report. Errors raised while a suite runs are recorded as
// failed checks, not rethrown; construction errors are the caller's to
// handle (the model is built before this is called).
RunOutcome execute_run(const RunConfig& cfg, const ModelDescriptor& model);

// The sign-and-convention ledger embedded in every report.
Json conventions_block();

// Deterministic text listing of the built-in models.
std::string list_models_text();

}  // namespace subcurv
