#include "msmr/smrlog.hpp"

#include <algorithm>
#include <map>

#include "msmr/engine.hpp"

namespace msmr {

namespace {

bool log_less(const LogPtr& a, const LogPtr& b) {
  if (a.get() == b.get()) return false;
  return lex_compare(*a, *b) < 0;
}

std::size_t common_prefix(const Log& a, const Log& b) {
  const std::size_t m = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < m && a[i] == b[i]) ++i;
  return i;
}

bool tail_contains(const Log& log, std::size_t from, const Command& cmd) {
  for (std::size_t i = from; i < log.size(); ++i) {
    if (log[i].cmd == cmd) return true;
  }
  return false;
}

void add_candidate(std::vector<LogEntry>& extra, const LogEntry& e) {
  for (auto& x : extra) {
    if (x.cmd == e.cmd) {
      if (e.birth < x.birth) x.birth = e.birth;
      return;
    }
  }
  extra.push_back(e);
}

}  // namespace

std::uint64_t command_hash(const Command& cmd) noexcept {
  return entry_hash(LogEntry{cmd, RoundIndex{0}});
}

std::uint64_t slot_key(const Command& cmd) noexcept {
  return command_hash(Command{cmd.client, cmd.seq, CommandKind::null, {}});
}

std::size_t append_fanout(double sigma, std::size_t n) { return log_budget(sigma, n); }

LogPtr extended_median_of(std::span<const LogPtr> chosen,
                          std::span<const LogEntry* const> appends) {
  thread_local std::vector<LogPtr> sorted;
  sorted.assign(chosen.begin(), chosen.end());
  std::sort(sorted.begin(), sorted.end(), log_less);
  const LogPtr median = sorted[sorted.size() / 2];
  const Log& lp = *median;

  thread_local std::vector<LogEntry> extra;
  extra.clear();
  for (const LogPtr& other : sorted) {
    if (other.get() == median.get()) continue;
    const std::size_t c = common_prefix(*other, lp);
    for (std::size_t i = c; i < other->size(); ++i) {
      const LogEntry& e = (*other)[i];
      if (!tail_contains(lp, c, e.cmd)) add_candidate(extra, e);
    }
  }
  for (const LogEntry* e : appends) {
    if (!contains_command(lp, e->cmd)) add_candidate(extra, *e);
  }
  sorted.clear();
  if (extra.empty()) return median;

  std::sort(extra.begin(), extra.end(),
            [](const LogEntry& a, const LogEntry& b) { return a.cmd < b.cmd; });
  auto out = std::make_shared<Log>();
  out->reserve(lp.size() + extra.size());
  out->insert(out->end(), lp.begin(), lp.end());
  out->insert(out->end(), extra.begin(), extra.end());
  return out;
}

LogPtr extended_median_step(std::span<const LogPtr> replies,
                            std::span<const LogEntry* const> appends, const RuleParams& params,
                            RngStream& rng) {
  if (replies.size() < params.l) return nullptr;
  thread_local std::vector<std::size_t> idx;
  thread_local std::vector<LogPtr> chosen;
  choose_subset(rng, replies.size(), params.l, idx);
  chosen.clear();
  for (std::size_t i : idx) chosen.push_back(replies[i]);
  LogPtr out = extended_median_of(chosen, appends);
  chosen.clear();
  return out;
}

void LogAudit::begin(const std::vector<LogPtr>& start, std::span<const std::uint8_t> blocked) {
  start_commands_.clear();
  start_slots_.clear();
  prefixes_.clear();
  std::unordered_set<const Log*> seen;
  std::unordered_set<const Log*> useful;
  for (std::size_t i = 0; i < start.size(); ++i) {
    const Log* l = start[i].get();
    if (!l) continue;
    if (seen.insert(l).second) {
      for (const auto& e : *l) {
        start_commands_.insert(command_hash(e.cmd));
        start_slots_.insert(slot_key(e.cmd));
      }
    }
    if (!blocked[i]) useful.insert(l);
  }
  if (useful.empty()) return;

  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (const Log* l : useful) {
    for (const auto& e : *l) ++counts[command_hash(e.cmd)];
  }
  for (const Log* l : useful) {
    std::uint64_t h = 0;
    for (const auto& e : *l) {
      h = chain_hash(h, e);
      const std::uint64_t key = command_hash(e.cmd);
      if (counts[key] != useful.size()) continue;
      auto& v = prefixes_[key];
      if (std::find(v.begin(), v.end(), h) == v.end()) v.push_back(h);
    }
  }
}

void LogAudit::check(const std::vector<LogPtr>& merged, std::span<const Command> appended) {
  std::unordered_set<std::uint64_t> pushed;
  std::unordered_set<std::uint64_t> pushed_slots;
  for (const auto& c : appended) {
    pushed.insert(command_hash(c));
    pushed_slots.insert(slot_key(c));
  }
  std::unordered_set<const Log*> seen;
  std::unordered_set<std::uint64_t> in_log;
  for (const LogPtr& lp : merged) {
    const Log* l = lp.get();
    if (!l || !seen.insert(l).second) continue;
    in_log.clear();
    std::uint64_t h = 0;
    std::size_t found = 0;
    for (const auto& e : *l) {
      const std::uint64_t key = command_hash(e.cmd);
      if (!in_log.insert(key).second) ++repetition_violations;
      if (e.cmd.kind == CommandKind::null) {
        // a null stands in for conflicting commands of the same slot
        const std::uint64_t slot = slot_key(e.cmd);
        if (!start_slots_.count(slot) && !pushed_slots.count(slot)) ++validity_violations;
      } else if (e.cmd.executable() && !start_commands_.count(key) && !pushed.count(key)) {
        ++validity_violations;
      }
      h = chain_hash(h, e);
      auto it = prefixes_.find(key);
      if (it != prefixes_.end()) {
        ++found;
        if (std::find(it->second.begin(), it->second.end(), h) == it->second.end()) {
          ++shrinkage_violations;
        }
      }
    }
    if (found != prefixes_.size()) shrinkage_violations += prefixes_.size() - found;
  }
}

namespace {

class SmrProtocol {
 public:
  using State = LogPtr;
  using Push = LogEntry;

  SmrProtocol(const SmrConfig& cfg, SmrReport& report)
      : cfg_(cfg), report_(report), fanout_(append_fanout(cfg.sigma, cfg.n)) {
    for (const auto& inj : cfg.injections) {
      report_.outcomes.push_back(CommandOutcome{inj.cmd, {}, {}, {}});
    }
    accepted_.assign(cfg.injections.size(), 0);
    deliveries_.resize(cfg.n);
  }

  std::size_t push_fanout() const { return fanout_; }
  bool answers(const State& s) const { return s != nullptr; }
  bool holds_value(const State& s) const { return s != nullptr; }
  std::string serialize(const State& s) const { return serialize_log(s); }

  void begin_round(RoundIndex r, std::span<const std::uint8_t> blocked,
                   const std::vector<State>& states) {
    for (auto& d : deliveries_) d.clear();
    appended_.clear();
    for (std::size_t c = 0; c < cfg_.injections.size(); ++c) {
      if (accepted_[c] || cfg_.injections[c].round > r.value) continue;
      RngStream rng(cfg_.seed, Entity::client, c, r.value, Purpose::delivery);
      const std::size_t target = static_cast<std::size_t>(rng.uniform(cfg_.n));
      if (blocked[target]) continue;
      auto& outcome = report_.outcomes[c];
      if (!outcome.injected_round) outcome.injected_round = r.value;
      deliveries_[target].push_back(c);
    }
    record_row(r, blocked, states);
    if (cfg_.audit) audit_.begin(states, blocked);
  }

  void emit(RoundIndex r, std::size_t server, const State& s, std::vector<Push>& out) {
    for (std::size_t c : deliveries_[server]) {
      if (!s) continue;
      accepted_[c] = 1;
      const Command& cmd = cfg_.injections[c].cmd;
      if (contains_command(*s, cmd)) continue;
      out.push_back(LogEntry{cmd, r});
      appended_.push_back(cmd);
    }
  }

  void step(const StepInput<State, Push>& in, State& out) {
    replies_.clear();
    for (std::size_t j : in.responders) replies_.push_back(in.states[j]);
    std::span<const LogEntry* const> appends;
    if (in.own) appends = in.pushes;
    out = extended_median_step(replies_, appends, cfg_.params, in.rng);
    replies_.clear();
  }

  void step_blocked(RoundIndex, std::size_t, const State&, State& out) { out = nullptr; }

  void end_round(RoundIndex, std::span<const std::uint8_t>, const std::vector<State>&,
                 std::vector<State>& after) {
    if (cfg_.audit) audit_.check(after, appended_);
  }

  void finish(std::uint64_t rounds_run) {
    report_.validity_violations = audit_.validity_violations;
    report_.repetition_violations = audit_.repetition_violations;
    report_.shrinkage_violations = audit_.shrinkage_violations;
    for (std::size_t c = 0; c < report_.outcomes.size(); ++c) {
      if (last_unstable_[c] < rounds_run && report_.outcomes[c].broadcast_round) {
        report_.outcomes[c].stable_round = last_unstable_[c] + 1;
      }
    }
  }

 private:
  void record_row(RoundIndex r, std::span<const std::uint8_t> blocked,
                  const std::vector<State>& states) {
    SmrRow row;
    row.round = r.value;
    std::unordered_map<const Log*, std::unordered_map<std::uint64_t, std::uint64_t>> positions;
    std::unordered_set<const Log*> useful;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const Log* l = states[i].get();
      if (!l) continue;
      row.max_log_length = std::max(row.max_log_length, l->size());
      if (!blocked[i]) {
        ++row.useful_count;
        useful.insert(l);
      }
      auto [it, fresh] = positions.try_emplace(l);
      if (!fresh) continue;
      std::uint64_t h = 0;
      for (const auto& e : *l) {
        h = chain_hash(h, e);
        it->second.emplace(command_hash(e.cmd), h);
      }
    }
    row.distinct_logs = positions.size();
    report_.series.push_back(row);

    last_unstable_.resize(report_.outcomes.size(), 0);
    for (std::size_t c = 0; c < report_.outcomes.size(); ++c) {
      auto& outcome = report_.outcomes[c];
      if (!outcome.injected_round) {
        last_unstable_[c] = r.value;
        continue;
      }
      const std::uint64_t key = command_hash(outcome.cmd);
      bool everywhere = !useful.empty();
      for (const Log* l : useful) {
        if (!positions[l].count(key)) everywhere = false;
      }
      if (everywhere && !outcome.broadcast_round) outcome.broadcast_round = r.value;
      std::optional<std::uint64_t> prefix;
      bool agree = !positions.empty();
      for (auto& [l, pos] : positions) {
        auto it = pos.find(key);
        if (it == pos.end() || (prefix && *prefix != it->second)) {
          agree = false;
          break;
        }
        prefix = it->second;
      }
      if (!agree) last_unstable_[c] = r.value;
    }
  }

  const SmrConfig& cfg_;
  SmrReport& report_;
  std::size_t fanout_;
  std::vector<std::uint8_t> accepted_;
  std::vector<std::vector<std::size_t>> deliveries_;
  std::vector<Command> appended_;
  std::vector<LogPtr> replies_;
  std::vector<std::uint64_t> last_unstable_;
  LogAudit audit_;
};

}  // namespace

SmrReport run_smr(const SmrConfig& config) {
  config.params.validate();
  SmrReport report;
  SmrProtocol protocol(config, report);
  EngineConfig ec{config.n, config.params.k, config.alpha, config.seed, config.archive};
  auto seed_log = std::make_shared<const Log>(Log{LogEntry{seed_command(), RoundIndex{0}}});
  Engine<SmrProtocol> engine(ec, protocol, config.adversary,
                             std::vector<LogPtr>(config.n, seed_log));
  for (std::uint64_t r = 1; r <= config.rounds; ++r) {
    engine.run_round();
    report.rounds_run = r;
  }
  protocol.finish(report.rounds_run);
  if (config.archive) report.archive = engine.archive();
  return report;
}

std::vector<Injection> staggered_injections(std::size_t clients, std::size_t per_client,
                                            std::uint64_t stagger, std::uint64_t spacing) {
  std::vector<Injection> out;
  for (std::size_t c = 0; c < clients; ++c) {
    for (std::size_t j = 0; j < per_client; ++j) {
      Command cmd{c + 1, j + 1, CommandKind::normal,
                  "c" + std::to_string(c + 1) + "-" + std::to_string(j + 1)};
      out.push_back(Injection{1 + c * stagger + j * spacing, std::move(cmd)});
    }
  }
  return out;
}

}  // namespace msmr
