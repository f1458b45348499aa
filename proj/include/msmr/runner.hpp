#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "msmr/analysis.hpp"
#include "msmr/commit.hpp"
#include "msmr/consensus.hpp"
#include "msmr/recovery.hpp"
#include "msmr/smrlog.hpp"

namespace msmr {

enum class Protocol { consensus, smr, commit, recover };
std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

std::string to_string(ValueRule r);
ValueRule rule_from_string(const std::string& name);
std::string to_string(InitMode m);

// "binary", "unanimous=7", "fraction-useful=0.3", "planted=60", "keys=FILE".
// A keys file lists one entry per server, whitespace separated; "-" is bottom.
InitSpec parse_init_flag(const std::string& flag);

struct InjectionPlan {
  std::size_t clients = 4;
  std::size_t per_client = 5;
  std::uint64_t stagger = 3;
  std::uint64_t spacing = 10;
};

struct RunConfig {
  std::string experiment = "run";
  Protocol protocol = Protocol::consensus;
  std::size_t n = 1024;
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  std::uint64_t rounds = 0;  // 0 = protocol default
  std::uint64_t alpha = 1;
  RuleParams params;
  ValueRule rule = ValueRule::median;
  InitSpec init;
  StrategySpec adversary;
  bool stop_on_agreement = true;
  double sigma = 5.0;
  std::uint64_t T = 0;  // 0 = derived
  double c_t = 6.0;
  double epsilon = 0.02;
  InjectionPlan injections;
  std::vector<Injection> schedule;  // explicit smr injections; replaces the plan when set
  std::optional<ClientPoolConfig> clients;  // unset = protocol default
  std::uint64_t tail_rounds = 0;
  bool check_certificates = false;
  std::size_t cert_servers = 5;
  std::size_t mutations = 10000;
  std::uint64_t surge_end = 0;
  bool archive = false;
  std::string out = "out";

  // Throws ConfigError on unknown keys or bad values.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

// JSON array of {"round", "client", "seq", "payload"} objects.
std::vector<Injection> injections_from_json(const nlohmann::json& j);
nlohmann::json injections_to_json(const std::vector<Injection>& v);

// Per-trial configs; trial t uses trial_seed(seed, t).
ConsensusConfig consensus_config(const RunConfig& cfg, std::size_t trial);
SmrConfig smr_config(const RunConfig& cfg, std::size_t trial);
CommitConfig commit_config(const RunConfig& cfg, std::size_t trial);
RecoveryConfig recovery_config(const RunConfig& cfg, std::size_t trial);

struct TrialOutput {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Trace series;
  Trace commands;  // per-command milestones; -1 marks a missing round
  nlohmann::json summary;
  std::uint64_t violations = 0;  // audit failures of any kind
  std::string forensic;
  std::vector<WorldSnapshot> archive;
};

TrialOutput run_trial(const RunConfig& cfg, std::size_t trial);

// Runs fn(0..trials-1) on up to `threads` workers; results in trial order.
template <class F>
auto parallel_trials(std::size_t trials, std::size_t threads, F fn)
    -> std::vector<decltype(fn(std::size_t{0}))> {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::optional<R>> slots(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < trials;) {
      if (failed.load()) return;
      try {
        slots[t].emplace(fn(t));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(trials);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::size_t default_threads();

// Output root: MEDIAN_SMR_OUT when set, `flag` otherwise.
std::filesystem::path resolve_out_dir(const std::string& flag);

struct RunResult {
  std::filesystem::path dir;
  std::uint64_t violations = 0;
  std::vector<std::filesystem::path> forensic_dumps;
};

// Writes <out>/<experiment>/<seed>/{metrics.csv, commands.csv, summary.json,
// config.echo.json} and, with archiving on, snapshots_<trial>.ndjson.
RunResult run_experiment(const RunConfig& cfg, const std::filesystem::path& out_root,
                         std::size_t threads);

struct ReplayResult {
  std::size_t rounds_compared = 0;
  std::optional<std::uint64_t> first_mismatch;  // round number
};

// Re-executes `trial` with archiving and compares against an ndjson archive.
ReplayResult replay_archive(const RunConfig& cfg, std::size_t trial,
                            const std::filesystem::path& archive);

}  // namespace msmr
