#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "msmr/adversary.hpp"
#include "msmr/rng.hpp"
#include "msmr/snapshot.hpp"
#include "msmr/types.hpp"

namespace msmr {

struct EngineConfig {
  std::size_t n = 0;
  std::size_t k = 6;          // pull requests per server per round
  std::uint64_t alpha = 1;    // adversary lateness
  std::uint64_t seed = 0;
  bool archive = false;       // keep full serialized snapshots
};

template <class State, class Push>
struct StepInput {
  RoundIndex round;
  std::size_t server = 0;
  const State& own;
  std::span<const std::size_t> responders;  // indices into `states`, with multiplicity
  const std::vector<State>& states;         // round-start states of everyone
  std::span<const Push* const> pushes;      // push messages delivered this round
  RngStream& rng;
};

// Synchronous round engine.
//
// A protocol P provides:
//   using State; using Push;
//   std::size_t push_fanout() const;
//   bool answers(const State&) const;
//   bool holds_value(const State&) const;
//   void begin_round(RoundIndex, std::span<const std::uint8_t> blocked, const std::vector<State>&);
//   void emit(RoundIndex, std::size_t server, const State&, std::vector<Push>& out);
//   void step(const StepInput<State, Push>&, State& out);
//   void step_blocked(RoundIndex, std::size_t server, const State& own, State& out);
//   void end_round(RoundIndex, std::span<const std::uint8_t> blocked,
//                  const std::vector<State>& before, std::vector<State>& after);
//   std::string serialize(const State&) const;
//
// All replies are computed from round-start states; the new states are
// written to a second buffer and swapped in after every server has stepped.
template <class P>
class Engine {
 public:
  using State = typename P::State;
  using Push = typename P::Push;

  Engine(EngineConfig cfg, P& protocol, StrategySpec strategy, std::vector<State> initial)
      : cfg_(cfg),
        protocol_(protocol),
        strategy_(std::move(strategy)),
        states_(std::move(initial)),
        next_(states_),
        blocked_(cfg.n, 0),
        activity_(cfg.n, 0),
        last_useful_(cfg.n, 0) {
    if (states_.size() != cfg_.n) throw ConfigError("initial state count does not match n");
    if (cfg_.n == 0) throw ConfigError("n must be positive");
    strategy_.validate();
    initial_snapshot_ = capture();
    recent_.push_back(initial_snapshot_);
    if (cfg_.archive) archive_.push_back(initial_snapshot_);
  }

  RoundIndex round() const noexcept { return round_; }
  std::size_t n() const noexcept { return cfg_.n; }
  const EngineConfig& config() const noexcept { return cfg_; }
  const std::vector<State>& states() const noexcept { return states_; }
  std::vector<State>& mutable_states() noexcept { return states_; }
  // Blocked flags and message activity of the most recently executed round.
  const std::vector<std::uint8_t>& blocked() const noexcept { return blocked_; }
  const std::vector<std::uint8_t>& activity() const noexcept { return activity_; }
  const std::vector<WorldSnapshot>& archive() const noexcept { return archive_; }
  std::size_t pending_injections = 0;

  // Snapshot of round max(1, r - alpha).
  const WorldSnapshot& snapshot_for_adversary(RoundIndex r) const {
    if (r.value <= cfg_.alpha || r.value - cfg_.alpha < 1) return initial_snapshot_;
    const std::uint64_t want = r.value - cfg_.alpha;
    for (auto it = recent_.rbegin(); it != recent_.rend(); ++it) {
      if (it->round.value == want) return *it;
    }
    throw ProtocolViolation("lagged snapshot no longer retained");
  }

  void run_round() {
    const RoundIndex r = round_;
    const std::size_t n = cfg_.n;

    const BlockDecision decision =
        choose_blocked(strategy_, snapshot_for_adversary(r), n, r, cfg_.seed);
    std::fill(blocked_.begin(), blocked_.end(), 0);
    std::fill(activity_.begin(), activity_.end(), 0);
    for (ServerId id : decision.blocked) blocked_[id.index()] = 1;

    protocol_.begin_round(r, blocked_, states_);

    pushes_.clear();
    inbox_.resize(n);
    for (auto& box : inbox_) box.clear();
    const std::size_t fanout = protocol_.push_fanout();
    for (std::size_t i = 0; i < n; ++i) {
      if (blocked_[i]) continue;
      const std::size_t before = pushes_.size();
      protocol_.emit(r, i, states_[i], pushes_);
      if (pushes_.size() == before) continue;
      RngStream rng(cfg_.seed, Entity::server, i, r.value, Purpose::push_targets);
      for (std::size_t m = before; m < pushes_.size(); ++m) {
        activity_[i] = 1;
        for (std::size_t f = 0; f < fanout; ++f) {
          const std::size_t t = static_cast<std::size_t>(rng.uniform(n));
          if (blocked_[t]) continue;
          inbox_[t].push_back(m);
          activity_[t] = 1;
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (blocked_[i]) {
        protocol_.step_blocked(r, i, states_[i], next_[i]);
        continue;
      }
      activity_[i] = 1;
      RngStream pull(cfg_.seed, Entity::server, i, r.value, Purpose::pull_targets);
      responders_.clear();
      draw_targets(pull, n, cfg_.k, targets_);
      for (std::size_t t : targets_) {
        if (blocked_[t] || !protocol_.answers(states_[t])) continue;
        responders_.push_back(t);
        activity_[t] = 1;
      }
      push_view_.clear();
      for (std::size_t m : inbox_[i]) push_view_.push_back(&pushes_[m]);
      RngStream step_rng(cfg_.seed, Entity::server, i, r.value, Purpose::step);
      StepInput<State, Push> in{r,           i,        states_[i], responders_,
                                states_,     push_view_, step_rng};
      protocol_.step(in, next_[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!blocked_[i] && protocol_.holds_value(states_[i])) last_useful_[i] = r.value;
    }

    protocol_.end_round(r, blocked_, states_, next_);
    std::swap(states_, next_);
    round_ = RoundIndex{r.value + 1};

    WorldSnapshot snap = capture();
    if (cfg_.archive) archive_.push_back(snap);
    recent_.push_back(std::move(snap));
    while (recent_.size() > cfg_.alpha + 1) recent_.pop_front();
  }

 private:
  WorldSnapshot capture() const {
    WorldSnapshot s;
    s.round = round_;
    s.pending_injections = pending_injections;
    s.servers.resize(cfg_.n);
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      s.servers[i].holds_value = protocol_.holds_value(states_[i]);
      s.servers[i].last_useful = last_useful_[i];
    }
    if (cfg_.archive) {
      s.states.reserve(cfg_.n);
      for (std::size_t i = 0; i < cfg_.n; ++i) {
        s.states.push_back(protocol_.serialize(states_[i]));
        s.servers[i].fingerprint = fingerprint_bytes(s.states.back());
      }
    }
    return s;
  }

  EngineConfig cfg_;
  P& protocol_;
  StrategySpec strategy_;
  std::vector<State> states_;
  std::vector<State> next_;
  std::vector<std::uint8_t> blocked_;
  std::vector<std::uint8_t> activity_;
  std::vector<std::uint64_t> last_useful_;
  RoundIndex round_{1};

  std::vector<Push> pushes_;
  std::vector<std::vector<std::size_t>> inbox_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> responders_;
  std::vector<const Push*> push_view_;

  WorldSnapshot initial_snapshot_;
  std::deque<WorldSnapshot> recent_;
  std::vector<WorldSnapshot> archive_;
};

}  // namespace msmr
