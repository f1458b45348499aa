#include <algorithm>
#include <unordered_set>

#include "msmr/commit.hpp"
#include "msmr/engine.hpp"
#include "msmr/smrlog.hpp"

namespace msmr {

namespace {

struct CompactState {
  LogPtr log;
  StatePtr state;
};

std::string serialize_state(const StatePtr& s) {
  if (!s) return "_";
  std::string out = std::to_string(s->committed_count) + ":" + to_hex(s->digest);
  return out;
}

class CompactProtocol {
 public:
  using State = CompactState;
  using Push = LogEntry;

  CompactProtocol(const CommitConfig& cfg, std::uint64_t T, CommitReport& report)
      : cfg_(cfg),
        T_(T),
        report_(report),
        pool_(cfg.clients, cfg.seed),
        fanout_(append_fanout(cfg.sigma, cfg.n)),
        deliveries_(cfg.n),
        merged_(cfg.n),
        min_sn_(cfg.clients.clients, 0) {
    const std::size_t total = pool_.total_commands();
    for (std::size_t i = 1; i <= 3; ++i) thresholds_.push_back((total * i + 2) / 3);
  }

  ClientPool& pool() { return pool_; }

  std::size_t push_fanout() const { return fanout_; }
  bool answers(const State& s) const { return s.log != nullptr; }
  bool holds_value(const State& s) const { return s.log != nullptr; }
  std::string serialize(const State& s) const {
    return serialize_log(s.log) + "|" + serialize_state(s.state);
  }

  void begin_round(RoundIndex r, std::span<const std::uint8_t> blocked,
                   const std::vector<State>& states) {
    for (auto& d : deliveries_) d.clear();
    appended_.clear();
    pool_.plan(r, blocked, deliveries_);
    if (cfg_.audit_logs) {
      logs_.resize(states.size());
      for (std::size_t i = 0; i < states.size(); ++i) logs_[i] = states[i].log;
      audit_.begin(logs_, blocked);
    }
  }

  void emit(RoundIndex r, std::size_t server, const State& s, std::vector<Push>& out) {
    for (std::size_t c : deliveries_[server]) {
      const Command& cmd = pool_.submission(c);
      switch (accept_client_command(*s.state, s.log, cmd)) {
        case AcceptDecision::spread:
          out.push_back(LogEntry{cmd, r});
          appended_.push_back(cmd);
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
    const bool was_bottom = in.own.log == nullptr;
    const auto& resp = in.responders;
    if (resp.size() < cfg_.params.l) {
      out.log = nullptr;
      out.state = (was_bottom && !resp.empty()) ? in.states[resp.front()].state : in.own.state;
      merged_[in.server] = nullptr;
      return;
    }
    choose_subset(in.rng, resp.size(), cfg_.params.l, idx_);
    chosen_.clear();
    for (std::size_t i : idx_) chosen_.push_back(in.states[resp[i]].log);
    std::span<const LogEntry* const> appends;
    if (!was_bottom) appends = in.pushes;
    LogPtr merged = extended_median_of(chosen_, appends);
    if (std::none_of(chosen_.begin(), chosen_.end(),
                     [&](const LogPtr& p) { return p.get() == merged.get(); })) {
      Log copy = *merged;
      if (nullify_conflicts(copy)) merged = std::make_shared<const Log>(std::move(copy));
    }
    chosen_.clear();
    merged_[in.server] = merged;
    const StatePtr& base = was_bottom ? in.states[resp[idx_.front()]].state : in.own.state;
    CommitResult res = commit_step(base, merged, in.round, T_);
    for (const auto& cmd : res.prefix) record_commit(cmd);
    out.log = std::move(res.log);
    out.state = std::move(res.state);
    if (was_bottom) ++report_.catch_up_events;
  }

  void step_blocked(RoundIndex, std::size_t server, const State& own, State& out) {
    out.log = nullptr;
    out.state = own.state;
    merged_[server] = nullptr;
  }

  void end_round(RoundIndex r, std::span<const std::uint8_t>, const std::vector<State>&,
                 std::vector<State>& after) {
    if (cfg_.audit_logs) audit_.check(merged_, appended_);

    CommitRow row;
    row.round = r.value;
    std::unordered_set<const SharedState*> distinct;
    std::fill(min_sn_.begin(), min_sn_.end(), ~std::uint64_t{0});
    const SharedState* ref = nullptr;
    bool disagree = false;
    for (const auto& s : after) {
      if (!s.log) continue;
      ++row.useful_count;
      if (!distinct.insert(s.state.get()).second) continue;
      if (!ref) {
        ref = s.state.get();
      } else if (ref->committed_count != s.state->committed_count ||
                 ref->digest != s.state->digest) {
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
    std::unordered_set<std::string> digests;
    for (const SharedState* s : distinct) digests.insert(to_hex(s->digest));
    row.distinct_digests = digests.size();
    report_.series.push_back(row);

    pool_.settle();
    if (cfg_.check_certificates) check_certificates(r, after);
  }

  void finish() {
    report_.validity_violations = audit_.validity_violations;
    report_.repetition_violations = audit_.repetition_violations;
    report_.shrinkage_violations = audit_.shrinkage_violations;
    report_.commands = pool_.records();
    report_.all_acked = pool_.all_acked();
  }

 private:
  void record_commit(const Command& cmd) {
    if (!cmd.executable()) return;
    auto [it, fresh] = report_.committed_commands.try_emplace({cmd.client, cmd.seq}, cmd);
    if (!fresh && it->second != cmd) ++report_.conflicting_commits;
  }

  void check_certificates(RoundIndex r, const std::vector<State>& after) {
    if (next_threshold_ >= thresholds_.size() ||
        pool_.acked_count() < thresholds_[next_threshold_]) {
      return;
    }
    const bool last = next_threshold_ + 1 == thresholds_.size();
    ++next_threshold_;
    std::vector<std::size_t> useful;
    for (std::size_t i = 0; i < after.size(); ++i) {
      if (after[i].log) useful.push_back(i);
    }
    if (useful.empty()) return;
    ++report_.certs.checkpoints;
    RngStream rng(cfg_.seed, Entity::audit, next_threshold_, r.value, Purpose::sample);
    std::vector<std::size_t> pick;
    choose_subset(rng, useful.size(), std::min(cfg_.cert_servers, useful.size()), pick);

    std::vector<std::pair<std::size_t, Certificate>> certs;
    for (std::size_t c = cfg_.clients.equivocating; c < pool_.size(); ++c) {
      const ClientCertStore& store = pool_.store(c);
      for (std::uint64_t seq = 1; seq <= store.latest_acked(); ++seq) {
        MergeOutcome m = client_merge_chain(store, seq);
        if (m.certificate) certs.emplace_back(c, std::move(*m.certificate));
      }
    }

    for (std::size_t p : pick) {
      const SharedState& s = *after[useful[p]].state;
      if (!storage_within_bounds(s.cert)) ++report_.certs.storage_violations;
      for (const auto& [c, cert] : certs) {
        if (pool_.store(c).latest_acked() != s.sn(pool_.client_id(c))) continue;
        ++report_.certs.checked;
        if (verify_certificate(s.cert, cert) == Verdict::accept) ++report_.certs.accepted;
      }
    }

    if (!last || certs.empty() || cfg_.mutations == 0) return;
    std::vector<std::string> encoded;
    for (const auto& [c, cert] : certs) encoded.push_back(encode_certificate(cert));
    for (std::size_t m = 0; m < cfg_.mutations; ++m) {
      const std::size_t which = static_cast<std::size_t>(rng.uniform(certs.size()));
      std::string bytes = encoded[which];
      const std::uint64_t bit = rng.uniform(bytes.size() * 8);
      bytes[bit / 8] = static_cast<char>(bytes[bit / 8] ^ (1u << (bit % 8)));
      const SharedState& s = *after[useful[pick[rng.uniform(pick.size())]]].state;
      ++report_.certs.mutations;
      auto decoded = decode_certificate(bytes);
      if (decoded && verify_certificate(s.cert, *decoded) == Verdict::accept) {
        ++report_.certs.mutations_accepted;
      }
    }
  }

  const CommitConfig& cfg_;
  std::uint64_t T_;
  CommitReport& report_;
  ClientPool pool_;
  std::size_t fanout_;
  std::vector<std::vector<std::size_t>> deliveries_;
  std::vector<LogPtr> merged_;
  std::vector<LogPtr> logs_;
  std::vector<LogPtr> chosen_;
  std::vector<std::size_t> idx_;
  std::vector<Command> appended_;
  std::vector<std::uint64_t> min_sn_;
  std::vector<std::size_t> thresholds_;
  std::size_t next_threshold_ = 0;
  LogAudit audit_;
};

}  // namespace

CommitReport run_commit(const CommitConfig& config) {
  config.params.validate();
  CommitReport report;
  report.T = config.T ? config.T : default_commit_timings(config.n, config.c_t).T;
  CompactProtocol protocol(config, report.T, report);
  EngineConfig ec{config.n, config.params.k, config.alpha, config.seed, config.archive};
  auto seed_log = std::make_shared<const Log>(Log{LogEntry{seed_command(), RoundIndex{0}}});
  auto s0 = std::make_shared<const SharedState>();
  Engine<CompactProtocol> engine(ec, protocol, config.adversary,
                                 std::vector<CompactState>(config.n, CompactState{seed_log, s0}));
  const std::uint64_t max_rounds = config.max_rounds ? config.max_rounds : 20 * report.T;
  std::optional<std::uint64_t> done_at;
  for (std::uint64_t r = 1; r <= max_rounds; ++r) {
    engine.run_round();
    report.rounds_run = r;
    if (!done_at && protocol.pool().all_acked()) done_at = r;
    if (done_at && r >= *done_at + config.tail_rounds) break;
  }
  protocol.finish();
  if (config.archive) report.archive = engine.archive();
  return report;
}

}  // namespace msmr
