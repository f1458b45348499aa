#include "msmr/consensus.hpp"

#include <algorithm>
#include <span>

#include "msmr/engine.hpp"

namespace msmr {

namespace {

struct NoPush {};

class ValueProtocol {
 public:
  using State = Value;
  using Push = NoPush;

  ValueProtocol(const ConsensusConfig& cfg, ConsensusReport& report)
      : cfg_(cfg), report_(report) {}

  std::size_t push_fanout() const { return 0; }
  bool answers(const State& s) const { return s.has_value(); }
  bool holds_value(const State& s) const { return s.has_value(); }
  std::string serialize(const State& s) const { return s ? std::to_string(*s) : "_"; }

  void begin_round(RoundIndex r, std::span<const std::uint8_t> blocked,
                   const std::vector<State>& states) {
    ConsensusRow row;
    row.round = r.value;
    useful_values_.clear();
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (!states[i]) continue;
      ++row.holders;
      if (*states[i] == static_cast<Key>(GossipValue::broadcast)) ++row.broadcast_holders;
      if (blocked[i]) continue;
      ++row.useful_count;
      useful_values_.push_back(*states[i]);
    }
    std::sort(useful_values_.begin(), useful_values_.end());
    row.distinct_values = static_cast<std::size_t>(
        std::unique(useful_values_.begin(), useful_values_.end()) - useful_values_.begin());
    row.agreed = row.useful_count > 0 && row.distinct_values == 1;
    if (row.agreed && !report_.agreement_round) {
      report_.agreement_round = r.value;
      report_.agreed_value = useful_values_.front();
    }
    if (row.holders == 0 && !report_.all_bottom_round) report_.all_bottom_round = r.value;
    if (cfg_.rule == ValueRule::gossip && row.holders > 0) {
      if (row.broadcast_holders == row.holders && !report_.broadcast_complete_round) {
        report_.broadcast_complete_round = r.value;
      }
      if (row.broadcast_holders == 0 && !report_.broadcast_extinct_round) {
        report_.broadcast_extinct_round = r.value;
      }
    }
    report_.series.push_back(row);
  }

  void emit(RoundIndex, std::size_t, const State&, std::vector<Push>&) {}

  void step(const StepInput<State, Push>& in, State& out) {
    keys_.clear();
    for (std::size_t j : in.responders) keys_.push_back(*in.states[j]);
    switch (cfg_.rule) {
      case ValueRule::median:
        out = median_step(in.own, keys_, cfg_.params, in.rng);
        break;
      case ValueRule::priority:
        out = priority_step(in.own, keys_, cfg_.params, in.rng);
        break;
      case ValueRule::gossip: {
        gossip_.clear();
        for (Key k : keys_) gossip_.push_back(static_cast<GossipValue>(k));
        const GossipState g = gossip_step(std::nullopt, gossip_, cfg_.params);
        out = g ? Value(static_cast<Key>(*g)) : std::nullopt;
        break;
      }
    }
  }

  void step_blocked(RoundIndex, std::size_t, const State&, State& out) { out = std::nullopt; }

  void end_round(RoundIndex, std::span<const std::uint8_t>, const std::vector<State>& before,
                 std::vector<State>& after) {
    if (cfg_.rule == ValueRule::gossip) return;
    start_values_.clear();
    for (const auto& v : before) {
      if (v) start_values_.push_back(*v);
    }
    std::sort(start_values_.begin(), start_values_.end());
    for (const auto& v : after) {
      if (v && !std::binary_search(start_values_.begin(), start_values_.end(), *v)) {
        ++report_.validity_violations;
      }
    }
  }

 private:
  const ConsensusConfig& cfg_;
  ConsensusReport& report_;
  std::vector<Key> useful_values_;
  std::vector<Key> start_values_;
  std::vector<Key> keys_;
  std::vector<GossipValue> gossip_;
};

std::vector<Value> initial_values(const ConsensusConfig& cfg) {
  const std::size_t n = cfg.n;
  RngStream rng(cfg.seed, Entity::init, 0, 0, Purpose::init);
  std::vector<Value> v(n);
  std::vector<std::size_t> order;
  switch (cfg.init.mode) {
    case InitMode::unanimous:
      std::fill(v.begin(), v.end(), Value(cfg.init.unanimous_value));
      break;
    case InitMode::binary:
      choose_subset(rng, n, n, order);
      for (std::size_t i = 0; i < n; ++i) v[order[i]] = i < n / 2 ? 0 : 1;
      break;
    case InitMode::fraction_useful: {
      if (cfg.init.fraction < 0.0 || cfg.init.fraction > 1.0) {
        throw ConfigError("useful fraction must lie in [0, 1]");
      }
      const std::size_t count = blocking_budget(cfg.init.fraction, n);
      choose_subset(rng, n, count, order);
      for (std::size_t i : order) v[i] = rng.uniform(2);
      break;
    }
    case InitMode::keys:
      if (cfg.init.keys.size() != n) throw ConfigError("keys list length must equal n");
      v = cfg.init.keys;
      break;
    case InitMode::planted: {
      if (cfg.init.planted > n) throw ConfigError("planted count exceeds n");
      std::fill(v.begin(), v.end(), Value(static_cast<Key>(GossipValue::dummy)));
      choose_subset(rng, n, cfg.init.planted, order);
      for (std::size_t i : order) v[i] = static_cast<Key>(GossipValue::broadcast);
      break;
    }
  }
  return v;
}

}  // namespace

ConsensusReport run_consensus(const ConsensusConfig& config) {
  config.params.validate();
  ConsensusReport report;
  ValueProtocol protocol(config, report);
  EngineConfig ec{config.n, config.params.k, config.alpha, config.seed, config.archive};
  Engine<ValueProtocol> engine(ec, protocol, config.adversary, initial_values(config));

  for (std::uint64_t r = 1; r <= config.rounds; ++r) {
    engine.run_round();
    report.rounds_run = r;
    if (report.all_bottom_round) break;
    if (config.rule == ValueRule::gossip) {
      if (config.stop_on_agreement &&
          (report.broadcast_complete_round || report.broadcast_extinct_round)) {
        break;
      }
    } else if (config.stop_on_agreement && report.agreement_round) {
      break;
    }
  }
  if (config.archive) report.archive = engine.archive();
  return report;
}

}  // namespace msmr
