// Runs every acceptance criterion with the pinned configs and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "msmr/acceptance.hpp"
#include "msmr/runner.hpp"

#ifndef MSMR_ACCEPTANCE_DIR
#error "MSMR_ACCEPTANCE_DIR must be defined"
#endif
#ifndef MSMR_GOLDEN_FILE
#error "MSMR_GOLDEN_FILE must be defined"
#endif

int main(int argc, char** argv) {
  using namespace msmr;
  AcceptOptions opts;
  opts.config_dir = MSMR_ACCEPTANCE_DIR;
  opts.golden = MSMR_GOLDEN_FILE;
  opts.threads = default_threads();
  opts.progress = &std::cerr;
  const std::string suite = argc > 1 ? argv[1] : "all";
  if (const char* t = std::getenv("MSMR_ACCEPT_THREADS"); t && *t) opts.threads = std::stoul(t);

  std::vector<CriterionVerdict> verdicts;
  try {
    verdicts = run_acceptance(suite_criteria(suite), opts);
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 2;
  }
  bool ok = true;
  nlohmann::json all = nlohmann::json::array();
  for (const auto& v : verdicts) {
    std::cout << v.line() << "\n";
    ok = ok && v.pass();
    all.push_back(v.to_json());
  }
  if (const char* path = std::getenv("MSMR_ACCEPT_JSON"); path && *path) {
    std::ofstream(path) << all.dump(2) << "\n";
  }
  std::cout << (ok ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << "\n";
  return ok ? 0 : 1;
}
