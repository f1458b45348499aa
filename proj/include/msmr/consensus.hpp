#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msmr/adversary.hpp"
#include "msmr/medianrules.hpp"
#include "msmr/snapshot.hpp"

namespace msmr {

enum class ValueRule { median, priority, gossip };

enum class InitMode {
  unanimous,         // every server holds `unanimous_value`
  binary,            // random half hold 0, the rest 1
  fraction_useful,   // floor(p*n) random servers hold a random bit, the rest bottom
  keys,              // explicit per-server values
  planted,           // gossip: `planted` random servers hold the broadcast value, the rest the dummy
};

struct InitSpec {
  InitMode mode = InitMode::unanimous;
  Key unanimous_value = 7;
  double fraction = 1.0;
  std::size_t planted = 1;
  std::vector<Value> keys;
};

struct ConsensusConfig {
  std::size_t n = 1024;
  RuleParams params;
  ValueRule rule = ValueRule::median;
  InitSpec init;
  StrategySpec adversary;
  std::uint64_t alpha = 1;
  std::uint64_t seed = 1;
  std::uint64_t rounds = 1000;
  bool stop_on_agreement = true;
  bool archive = false;
};

struct ConsensusRow {
  std::uint64_t round = 0;
  std::size_t useful_count = 0;    // holds a value and not blocked
  std::size_t distinct_values = 0; // among useful servers
  bool agreed = false;
  std::size_t holders = 0;         // non-bottom servers, blocked or not
  std::size_t broadcast_holders = 0;  // gossip: non-bottom servers holding the broadcast value
};

struct ConsensusReport {
  std::vector<ConsensusRow> series;
  std::optional<std::uint64_t> agreement_round;
  std::optional<std::uint64_t> all_bottom_round;
  // gossip: first round at which the dummy (resp. broadcast) value is extinct
  std::optional<std::uint64_t> broadcast_complete_round;
  std::optional<std::uint64_t> broadcast_extinct_round;
  std::optional<Key> agreed_value;
  std::uint64_t validity_violations = 0;
  std::uint64_t rounds_run = 0;
  std::vector<WorldSnapshot> archive;
};

ConsensusReport run_consensus(const ConsensusConfig& config);

}  // namespace msmr
