#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "subcurv/criteria.hpp"
#include "subcurv/errors.hpp"
#include "subcurv/models.hpp"
#include "subcurv/runner.hpp"
#include "subcurv/version.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitModelError = 3;

void print_usage(std::ostream& os) {
  os << "usage:\n"
     << "  " << subcurv::kToolName << " run <config-path>\n"
     << "  " << subcurv::kToolName << " list-models\n"
     << "  " << subcurv::kToolName << " describe <theorem-id>\n"
     << "\n"
     << "run executes the suites in the config file and writes a JSON\n"
     << "report to the configured output ('-' or unset: stdout). Exit\n"
     << "status: 0 all checks pass, 1 check failure, 2 configuration\n"
     << "error, 3 model construction error. SUBCURV_THREADS caps the\n"
     << "quadrature worker count.\n";
}

int cmd_run(const std::string& path) {
  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot read config file: " << path << "\n";
      return kExitConfigError;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  subcurv::RunConfig cfg;
  try {
    cfg = subcurv::parse_run_config(text);
  } catch (const subcurv::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  subcurv::ModelDescriptor model;
  try {
    model = subcurv::make_model(cfg.model_name, cfg.model_params);
  } catch (const subcurv::Error& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitModelError;
  }

  const subcurv::RunOutcome out = subcurv::execute_run(cfg, model);

  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << out.report << "\n";
  } else {
    std::ofstream of(cfg.output, std::ios::binary);
    if (!of) {
      std::cerr << "error: cannot write report to: " << cfg.output << "\n";
      return kExitConfigError;
    }
    of << out.report << "\n";
  }

  std::cerr << model.name << ": " << out.checks_passed << "/" << out.checks_run
            << " checks passed\n";
  if (!out.passed)
    std::cerr << "first failure: " << out.first_failure << "\n";
  return out.passed ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(std::cerr);
    return kExitConfigError;
  }
  const std::string cmd = argv[1];
  if (cmd == "run") {
    if (argc != 3) {
      print_usage(std::cerr);
      return kExitConfigError;
    }
    return cmd_run(argv[2]);
  }
  if (cmd == "list-models") {
    if (argc != 2) {
      print_usage(std::cerr);
      return kExitConfigError;
    }
    std::cout << subcurv::list_models_text();
    return kExitPass;
  }
  if (cmd == "describe") {
    if (argc != 3) {
      print_usage(std::cerr);
      return kExitConfigError;
    }
    try {
      std::cout << subcurv::describe_theorem(argv[2]) << "\n";
    } catch (const subcurv::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      print_usage(std::cerr);
      return kExitConfigError;
    }
    return kExitPass;
  }
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    print_usage(std::cout);
    return kExitPass;
  }
  if (cmd == "--version") {
    std::cout << subcurv::kToolName << " " << subcurv::kToolVersion << "\n";
    return kExitPass;
  }
  print_usage(std::cerr);
  return kExitConfigError;
}
