#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "msmr/adversary.hpp"
#include "msmr/command.hpp"
#include "msmr/medianrules.hpp"
#include "msmr/snapshot.hpp"

namespace msmr {

// Extended median rule. Fewer than l replies gives bottom. Otherwise the
// lexicographic median L' of a uniformly chosen l-subset M is extended by
// every command found in M's logs or in this round's append requests that
// L' lacks, in canonical command order. Birth rounds come from L' where the
// command is present there, otherwise the minimum over the sources.
LogPtr extended_median_step(std::span<const LogPtr> replies,
                            std::span<const LogEntry* const> appends, const RuleParams& params,
                            RngStream& rng);

// Same rule with the subset already chosen (used by oracles and tests).
LogPtr extended_median_of(std::span<const LogPtr> chosen,
                          std::span<const LogEntry* const> appends);

std::uint64_t command_hash(const Command& cmd) noexcept;
// Hash of the (client, seq) slot, shared by every payload for that slot.
std::uint64_t slot_key(const Command& cmd) noexcept;

// Per-round log invariants: validity, no repetition, prefix-set shrinkage.
class LogAudit {
 public:
  // Round-start logs and the blocked flags of the round.
  void begin(const std::vector<LogPtr>& start, std::span<const std::uint8_t> blocked);
  // Logs produced by the merge step (before any commitment), plus the
  // commands this round's append requests carried.
  void check(const std::vector<LogPtr>& merged, std::span<const Command> appended);

  std::uint64_t validity_violations = 0;
  std::uint64_t repetition_violations = 0;
  std::uint64_t shrinkage_violations = 0;

 private:
  std::unordered_set<std::uint64_t> start_commands_;
  std::unordered_set<std::uint64_t> start_slots_;
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> prefixes_;
};

struct Injection {
  std::uint64_t round = 1;  // first round the client submits
  Command cmd;
};

struct SmrConfig {
  std::size_t n = 256;
  RuleParams params;
  double sigma = 5.0;
  StrategySpec adversary;
  std::uint64_t alpha = 1;
  std::uint64_t seed = 1;
  std::uint64_t rounds = 200;
  std::vector<Injection> injections;
  bool audit = true;
  bool archive = false;
};

struct CommandOutcome {
  Command cmd;
  std::optional<std::uint64_t> injected_round;   // first non-blocked receipt
  std::optional<std::uint64_t> broadcast_round;  // first round all useful logs hold it
  std::optional<std::uint64_t> stable_round;     // position fixed from here to the end
};

struct SmrRow {
  std::uint64_t round = 0;
  std::size_t useful_count = 0;
  std::size_t distinct_logs = 0;
  std::size_t max_log_length = 0;
};

struct SmrReport {
  std::vector<CommandOutcome> outcomes;
  std::vector<SmrRow> series;
  std::uint64_t validity_violations = 0;
  std::uint64_t repetition_violations = 0;
  std::uint64_t shrinkage_violations = 0;
  std::uint64_t rounds_run = 0;
  std::vector<WorldSnapshot> archive;
};

std::size_t append_fanout(double sigma, std::size_t n);

SmrReport run_smr(const SmrConfig& config);

// Staggered schedule: `clients` clients, `per_client` commands each, client
// c submitting its j-th command at round 1 + c*stagger + j*spacing.
std::vector<Injection> staggered_injections(std::size_t clients, std::size_t per_client,
                                            std::uint64_t stagger, std::uint64_t spacing);

}  // namespace msmr
