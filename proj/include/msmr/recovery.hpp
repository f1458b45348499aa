#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msmr/adversary.hpp"
#include "msmr/commit.hpp"

namespace msmr {

enum class ResetState : std::uint8_t { bottom = 0, reset = 1, no_reset = 2 };
std::string to_string(ResetState r);

struct Checkpoint {
  StatePtr S;
  LogPtr P;  // nullptr only in the initial checkpoint
  std::uint64_t W = 0;
};
using CheckpointPtr = std::shared_ptr<const Checkpoint>;

struct RecoveryServer {
  LogPtr log;
  StatePtr state;
  ResetState R = ResetState::no_reset;
  CheckpointPtr cp;
};

RecoveryServer initial_recovery_server();

// One round inside a window. `replies` are the states of the servers that
// answered (R != bottom). Logs follow the extended median rule over the
// replies that carry a log. With at least l replies, R becomes no-reset if
// any reply says so and reset otherwise, and a strictly newer checkpoint is
// adopted (first reply wins ties), replacing S and L. Fewer replies give
// R = bottom.
RecoveryServer window_round_step(const RecoveryServer& own,
                                 std::span<const RecoveryServer* const> replies,
                                 std::span<const LogEntry* const> appends, RoundIndex round,
                                 const RuleParams& params, RngStream& rng);

struct BoundaryOutcome {
  bool rolled_back = false;
  bool created_checkpoint = false;
};

// Applied to every server between windows. A reset server first rolls S
// and L back to its checkpoint. A server with a log then commits the
// checkpoint's P, strips it from L and takes checkpoint (S, aged prefix of
// L, next_window) with R = no-reset; a server without a log gets R = reset.
BoundaryOutcome window_boundary(RecoveryServer& s, std::uint64_t next_window, RoundIndex round,
                                std::uint64_t T, DigestHistory* history = nullptr);

struct WindowClass {
  bool good = false;
  bool happy = false;
};

// counts[i] are the end-of-round counts for the i-th round of the window.
WindowClass classify_window(std::span<const std::size_t> r_counts,
                            std::span<const std::size_t> l_counts, std::size_t n,
                            std::uint64_t T, std::uint64_t t_d, double epsilon);

struct RecoveryTimings {
  std::uint64_t budget = 0;  // each of the phase budgets
  std::uint64_t t_d = 0;
  std::uint64_t T = 0;
};
RecoveryTimings default_recovery_timings(std::size_t n, double c);

struct RecoveryConfig {
  std::size_t n = 512;
  RuleParams params;
  double sigma = 5.0;
  double c_budget = 6.0;
  std::uint64_t T = 0;  // 0 = derived
  double epsilon = 0.02;
  StrategySpec adversary;
  std::uint64_t alpha = 1;
  std::uint64_t seed = 1;
  std::uint64_t rounds = 0;      // 0 = 20*T
  std::uint64_t surge_end = 0;   // 0 = last round of the adversary schedule
  ClientPoolConfig clients{20, 1000, 5, 0};
  bool archive = false;
};

struct WindowRow {
  std::uint64_t window = 0;
  bool good = false;
  bool happy = false;
  std::size_t checkpoints_created = 0;
  std::uint64_t max_W = 0;
  std::size_t resets = 0;  // rollbacks at the boundary closing the window
};

struct RecoveryRow {
  std::uint64_t round = 0;
  std::size_t r_live = 0;  // R != bottom
  std::size_t l_live = 0;  // L != bottom
  std::uint64_t committed_count = 0;
  std::uint64_t max_W = 0;
};

struct RecoveryReport {
  std::uint64_t T = 0;
  std::uint64_t t_d = 0;
  std::vector<RecoveryRow> series;
  std::vector<WindowRow> windows;
  std::vector<CommandRecord> commands;
  std::uint64_t monotonicity_violations = 0;
  std::string forensic;  // state dump of the first monotonicity violation
  std::uint64_t checkpoint_conflicts = 0;
  std::uint64_t mutual_exclusion_violations = 0;
  std::uint64_t causality_violations = 0;
  std::uint64_t bottom_invariant_violations = 0;  // R = bottom while L != bottom
  std::uint64_t safety_violations = 0;
  std::uint64_t surge_end = 0;
  std::optional<std::uint64_t> recovered_round;
  std::optional<std::uint64_t> post_surge_commit_round;  // first command injected after the surge
  std::uint64_t rounds_run = 0;
  bool aborted = false;
  std::vector<WorldSnapshot> archive;
};

RecoveryReport run_recovery(const RecoveryConfig& config);

}  // namespace msmr
