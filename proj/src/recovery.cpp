#include "msmr/recovery.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_set>

#include "msmr/engine.hpp"
#include "msmr/smrlog.hpp"

namespace msmr {

std::string to_string(ResetState r) {
  switch (r) {
    case ResetState::bottom: return "bottom";
    case ResetState::reset: return "reset";
    case ResetState::no_reset: return "no-reset";
  }
  return "bottom";
}

namespace {

LogPtr dummy_log(RoundIndex round) {
  return std::make_shared<const Log>(Log{LogEntry{dummy_command(), round}});
}

LogPtr log_or_dummy(const LogPtr& p, RoundIndex round) {
  return (p && !p->empty()) ? p : dummy_log(round);
}

}  // namespace

RecoveryServer initial_recovery_server() {
  RecoveryServer s;
  auto s0 = std::make_shared<const SharedState>();
  s.log = std::make_shared<const Log>(Log{LogEntry{seed_command(), RoundIndex{0}}});
  s.state = s0;
  s.R = ResetState::no_reset;
  s.cp = std::make_shared<const Checkpoint>(Checkpoint{s0, nullptr, 0});
  return s;
}

RecoveryServer window_round_step(const RecoveryServer& own,
                                 std::span<const RecoveryServer* const> replies,
                                 std::span<const LogEntry* const> appends, RoundIndex round,
                                 const RuleParams& params, RngStream& rng) {
  RecoveryServer out = own;
  if (replies.size() < params.l) {
    out.log = nullptr;
    out.R = ResetState::bottom;
    return out;
  }

  thread_local std::vector<LogPtr> logs;
  logs.clear();
  for (const auto* r : replies) {
    if (r->log) logs.push_back(r->log);
  }
  if (logs.size() >= params.l) {
    std::span<const LogEntry* const> used;
    if (own.log) used = appends;
    LogPtr merged = extended_median_step(logs, used, params, rng);
    if (std::none_of(logs.begin(), logs.end(),
                     [&](const LogPtr& p) { return p.get() == merged.get(); })) {
      Log copy = *merged;
      if (nullify_conflicts(copy)) merged = std::make_shared<const Log>(std::move(copy));
    }
    out.log = std::move(merged);
  } else {
    out.log = nullptr;
  }
  logs.clear();

  bool any_no_reset = false;
  const RecoveryServer* newest = nullptr;
  for (const auto* r : replies) {
    if (r->R == ResetState::no_reset) any_no_reset = true;
    if (!newest || r->cp->W > newest->cp->W) newest = r;
  }
  out.R = any_no_reset ? ResetState::no_reset : ResetState::reset;
  if (newest->cp->W > own.cp->W) {
    out.cp = newest->cp;
    out.state = newest->cp->S;
    out.log = log_or_dummy(newest->cp->P, round);
  }
  return out;
}

BoundaryOutcome window_boundary(RecoveryServer& s, std::uint64_t next_window, RoundIndex round,
                                std::uint64_t T, DigestHistory* history) {
  BoundaryOutcome out;
  if (s.R == ResetState::reset) {
    s.state = s.cp->S;
    s.log = log_or_dummy(s.cp->P, round);
    out.rolled_back = true;
  }
  if (!s.log) {
    s.R = ResetState::reset;
    return out;
  }

  auto next_state = std::make_shared<SharedState>(*s.state);
  Log rest;
  if (s.cp->P && !s.cp->P->empty()) {
    const Log& P = *s.cp->P;
    for (const auto& e : P) commit_command(*next_state, e.cmd, history);
    for (const auto& e : *s.log) {
      if (!contains_command(P, e.cmd)) rest.push_back(e);
    }
  } else {
    rest = *s.log;
  }
  if (rest.empty()) rest.push_back(LogEntry{dummy_command(), round});

  auto aged = std::make_shared<Log>();
  for (const auto& e : rest) {
    if (e.birth.value > round.value || round.value - e.birth.value < T) break;
    aged->push_back(e);
  }
  StatePtr committed = std::move(next_state);
  s.state = committed;
  s.log = std::make_shared<const Log>(std::move(rest));
  s.cp = std::make_shared<const Checkpoint>(Checkpoint{committed, std::move(aged), next_window});
  s.R = ResetState::no_reset;
  out.created_checkpoint = true;
  return out;
}

WindowClass classify_window(std::span<const std::size_t> r_counts,
                            std::span<const std::size_t> l_counts, std::size_t n,
                            std::uint64_t T, std::uint64_t t_d, double epsilon) {
  // count > (1/3 - epsilon) n, scaled by 3 so that epsilon = 0 is exact
  const double threshold = (1.0 - 3.0 * epsilon) * static_cast<double>(n);
  const std::size_t span = T > t_d ? static_cast<std::size_t>(T - t_d) : 0;
  WindowClass c{true, true};
  if (r_counts.size() < span || l_counts.size() < span) return WindowClass{false, false};
  for (std::size_t i = 0; i < span; ++i) {
    if (!(3.0 * static_cast<double>(r_counts[i]) > threshold)) c.good = false;
    if (!(3.0 * static_cast<double>(l_counts[i]) > threshold)) c.happy = false;
  }
  return c;
}

RecoveryTimings default_recovery_timings(std::size_t n, double c) {
  RecoveryTimings t;
  t.budget = log_budget(c, n);
  t.t_d = t.budget;
  t.T = 3 * t.budget + 1;
  return t;
}

namespace {

std::string describe(const RecoveryServer& s) {
  std::ostringstream os;
  os << "R=" << to_string(s.R) << " L=" << serialize_log(s.log);
  if (s.state) os << " count=" << s.state->committed_count << " digest=" << to_hex(s.state->digest);
  if (s.cp) os << " W=" << s.cp->W;
  return os.str();
}

std::uint64_t checkpoint_fingerprint(const Checkpoint& c) {
  std::uint64_t h = fingerprint_bytes(to_hex(c.S->digest));
  h = mix64(h ^ c.S->committed_count);
  return mix64(h ^ fingerprint_bytes(serialize_log(c.P)));
}

class RecoveryProtocol {
 public:
  using State = RecoveryServer;
  using Push = LogEntry;

  RecoveryProtocol(const RecoveryConfig& cfg, const RecoveryTimings& t, RecoveryReport& report)
      : cfg_(cfg),
        t_(t),
        report_(report),
        pool_(cfg.clients, cfg.seed),
        fanout_(append_fanout(cfg.sigma, cfg.n)),
        deliveries_(cfg.n),
        min_sn_(cfg.clients.clients, 0) {}

  ClientPool& pool() { return pool_; }
  bool aborted() const { return report_.aborted; }

  std::size_t push_fanout() const { return fanout_; }
  bool answers(const State& s) const { return s.R != ResetState::bottom; }
  bool holds_value(const State& s) const { return s.log != nullptr; }
  std::string serialize(const State& s) const { return describe(s); }

  void begin_round(RoundIndex r, std::span<const std::uint8_t> blocked,
                   const std::vector<State>&) {
    for (auto& d : deliveries_) d.clear();
    pool_.plan(r, blocked, deliveries_);
  }

  void emit(RoundIndex r, std::size_t server, const State& s, std::vector<Push>& out) {
    for (std::size_t c : deliveries_[server]) {
      const Command& cmd = pool_.submission(c);
      switch (accept_client_command(*s.state, s.log, cmd)) {
        case AcceptDecision::spread:
          out.push_back(LogEntry{cmd, r});
          break;
        case AcceptDecision::ack_committed:
          pool_.acknowledge(c, cmd, ack_material(s.state->cert, cmd.client), r);
          break;
        case AcceptDecision::ignore:
          break;
      }
    }
  }

  void step(const StepInput<State, Push>& in, State& out) {
    replies_.clear();
    for (std::size_t j : in.responders) replies_.push_back(&in.states[j]);
    out = window_round_step(in.own, replies_, in.pushes, in.round, cfg_.params, in.rng);
  }

  void step_blocked(RoundIndex, std::size_t, const State& own, State& out) {
    out = own;
    out.log = nullptr;
    out.R = ResetState::bottom;
  }

  void end_round(RoundIndex r, std::span<const std::uint8_t>, const std::vector<State>& before,
                 std::vector<State>& after) {
    const std::size_t n = after.size();
    RecoveryRow row;
    row.round = r.value;
    for (const auto& s : after) {
      if (s.R != ResetState::bottom) ++row.r_live;
      if (s.log) ++row.l_live;
      if (s.R == ResetState::bottom && s.log) ++report_.bottom_invariant_violations;
    }
    r_counts_.push_back(row.r_live);
    l_counts_.push_back(row.l_live);

    if (r.value % t_.T == 0) boundary(r, after);

    for (std::size_t i = 0; i < n; ++i) {
      const SharedState* a = before[i].state.get();
      const SharedState* b = after[i].state.get();
      if (a == b) continue;
      if (!history_.extends(a->digest, a->committed_count, b->digest, b->committed_count)) {
        ++report_.monotonicity_violations;
        if (report_.forensic.empty()) {
          report_.forensic = "round " + std::to_string(r.value) + " server " +
                             std::to_string(i + 1) + "\n before: " + describe(before[i]) +
                             "\n after:  " + describe(after[i]);
        }
        report_.aborted = true;
      }
    }

    std::unordered_set<const SharedState*> distinct;
    std::fill(min_sn_.begin(), min_sn_.end(), ~std::uint64_t{0});
    const SharedState* ref = nullptr;
    bool disagree = false;
    for (const auto& s : after) {
      row.max_W = std::max(row.max_W, s.cp->W);
      if (!s.log || !distinct.insert(s.state.get()).second) continue;
      if (!ref) {
        ref = s.state.get();
      } else if (ref->digest != s.state->digest) {
        disagree = true;
      }
      for (std::size_t c = 0; c < min_sn_.size(); ++c) {
        min_sn_[c] = std::min(min_sn_[c], s.state->sn(pool_.client_id(c)));
      }
    }
    if (disagree) ++report_.safety_violations;
    if (ref) {
      row.committed_count = ref->committed_count;
      pool_.observe_commits(r, min_sn_);
    }
    report_.series.push_back(row);
    pool_.settle();

    if (r.value == report_.surge_end) {
      for (const auto& s : after) pre_surge_max_ = std::max(pre_surge_max_, s.state->committed_count);
    }
    if (r.value > report_.surge_end && !report_.recovered_round && ref && !disagree &&
        row.l_live * 3 >= n && ref->committed_count > pre_surge_max_) {
      report_.recovered_round = r.value;
    }
  }

  void finish() {
    report_.commands = pool_.records();
    for (const auto& rec : report_.commands) {
      if (rec.injected_round && *rec.injected_round > report_.surge_end && rec.commit_round) {
        if (!report_.post_surge_commit_round || *rec.commit_round < *report_.post_surge_commit_round) {
          report_.post_surge_commit_round = *rec.commit_round;
        }
      }
    }
  }

 private:
  void boundary(RoundIndex r, std::vector<State>& states) {
    const std::uint64_t window = r.value / t_.T;  // index of the window that starts next
    bool any_reset = false;
    bool any_no_reset = false;
    std::uint64_t max_w = 0;
    for (const auto& s : states) {
      if (s.R == ResetState::reset) any_reset = true;
      if (s.R == ResetState::no_reset) any_no_reset = true;
      max_w = std::max(max_w, s.cp->W);
    }
    if (any_reset && any_no_reset) ++report_.mutual_exclusion_violations;

    WindowRow row;
    row.window = window - 1;
    const WindowClass wc = classify_window(r_counts_, l_counts_, states.size(), t_.T, t_.t_d,
                                           cfg_.epsilon);
    row.good = wc.good;
    row.happy = wc.happy;
    r_counts_.clear();
    l_counts_.clear();

    for (auto& s : states) {
      const std::uint64_t held = s.cp->W;
      const BoundaryOutcome o = window_boundary(s, window, r, t_.T, &history_);
      if (o.rolled_back) ++row.resets;
      if (!o.created_checkpoint) continue;
      ++row.checkpoints_created;
      if (held != max_w) ++report_.causality_violations;
      const std::uint64_t fp = checkpoint_fingerprint(*s.cp);
      auto [it, fresh] = checkpoints_.try_emplace(window, fp);
      if (!fresh && it->second != fp) ++report_.checkpoint_conflicts;
    }
    for (const auto& s : states) row.max_W = std::max(row.max_W, s.cp->W);
    report_.windows.push_back(row);
  }

  const RecoveryConfig& cfg_;
  RecoveryTimings t_;
  RecoveryReport& report_;
  ClientPool pool_;
  std::size_t fanout_;
  std::vector<std::vector<std::size_t>> deliveries_;
  std::vector<const RecoveryServer*> replies_;
  std::vector<std::uint64_t> min_sn_;
  std::vector<std::size_t> r_counts_;
  std::vector<std::size_t> l_counts_;
  std::map<std::uint64_t, std::uint64_t> checkpoints_;
  std::uint64_t pre_surge_max_ = 0;
  DigestHistory history_;
};

}  // namespace

RecoveryReport run_recovery(const RecoveryConfig& config) {
  config.params.validate();
  RecoveryReport report;
  RecoveryTimings t = default_recovery_timings(config.n, config.c_budget);
  if (config.T) t.T = config.T;
  report.T = t.T;
  report.t_d = t.t_d;
  report.surge_end = config.surge_end;
  if (!report.surge_end) {
    for (const auto& p : config.adversary.schedule) {
      report.surge_end = std::max(report.surge_end, p.to_round);
    }
  }
  RecoveryProtocol protocol(config, t, report);
  EngineConfig ec{config.n, config.params.k, config.alpha, config.seed, config.archive};
  Engine<RecoveryProtocol> engine(ec, protocol, config.adversary,
                                  std::vector<RecoveryServer>(config.n, initial_recovery_server()));
  const std::uint64_t rounds = config.rounds ? config.rounds : 20 * t.T;
  for (std::uint64_t r = 1; r <= rounds; ++r) {
    engine.run_round();
    report.rounds_run = r;
    if (protocol.aborted()) break;
  }
  protocol.finish();
  if (config.archive) report.archive = engine.archive();
  return report;
}

}  // namespace msmr
