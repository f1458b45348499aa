#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msmr/runner.hpp"

namespace msmr {

// One pinned acceptance criterion: runs plus pass thresholds.
struct CriterionSpec {
  std::string id;
  std::string description;
  std::size_t min_pass = 0;  // trials that must pass out of each run's trials
  nlohmann::json bounds;     // criterion-specific, validated by the evaluator
  std::vector<RunConfig> runs;

  static CriterionSpec from_json(const nlohmann::json& j);
};

CriterionSpec load_criterion(const std::filesystem::path& path);

struct VerdictPart {
  std::string name;
  std::uint64_t passed = 0;
  std::uint64_t total = 0;
  std::uint64_t required = 0;
  bool pass() const noexcept { return total > 0 && passed >= required; }
};

struct CriterionVerdict {
  std::string id;
  std::vector<VerdictPart> parts;
  std::string detail;
  nlohmann::json data;

  bool pass() const;
  std::uint64_t passed() const;  // of the weakest part
  std::uint64_t total() const;
  double threshold() const;
  std::string line() const;
  nlohmann::json to_json() const;
};

struct AcceptOptions {
  std::filesystem::path config_dir;
  std::optional<std::uint64_t> seed;  // overrides the pinned seeds
  std::optional<std::size_t> trials;  // overrides the pinned trial counts (not for verdicts of record)
  std::size_t threads = 1;
  std::filesystem::path golden;       // certificate golden vectors, optional
  std::ostream* progress = nullptr;
};

// Criteria ids for a suite name: curves, consensus, gossip, smr, commit,
// certs, recovery, all, or a single id such as "A4".
std::vector<std::string> suite_criteria(const std::string& suite);

std::vector<CriterionVerdict> run_acceptance(const std::vector<std::string>& ids, const AcceptOptions& opts);

// Stand-alone checks reused by the unit tests.
bool forest_matches_scratch(std::size_t max_leaves, std::string* detail = nullptr);
bool golden_vectors_match(const std::filesystem::path& path, std::string* detail = nullptr);

}  // namespace msmr
