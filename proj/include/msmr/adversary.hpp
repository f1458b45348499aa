#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "msmr/snapshot.hpp"
#include "msmr/types.hpp"

namespace msmr {

enum class StrategyKind {
  none,
  uniform_random,
  sticky,
  target_useful,
  permanent_set,
  surge_schedule,
  partition,
};

enum class PartitionMode { smaller, alternate };

struct Phase {
  std::uint64_t from_round = 1;
  std::uint64_t to_round = 1;
  double beta = 0.0;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::none;
  double beta = 0.0;
  std::size_t set_size = 0;     // permanent-set
  double set_fraction = 0.0;    // permanent-set, used when set_size == 0
  std::uint64_t period = 10;    // sticky: rounds between redraws
  std::vector<Phase> schedule;  // surge-schedule, partition
  double split = 0.5;           // partition: fraction on side A
  PartitionMode mode = PartitionMode::smaller;

  // Throws ConfigError on beta > 1, overlapping phases, bad fractions.
  void validate() const;
  bool bounded() const noexcept;

  static StrategySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);

struct BlockDecision {
  RoundIndex round{1};
  std::vector<ServerId> blocked;  // ascending
};

// Pure function of its arguments. The snapshot is the lagged view; the
// round number is public knowledge.
BlockDecision choose_blocked(const StrategySpec& spec, const WorldSnapshot& lagged,
                             std::size_t n, RoundIndex round,
                             std::uint64_t adversary_seed);

}  // namespace msmr
