#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "msmr/consensus.hpp"
#include "msmr/engine.hpp"
#include "msmr/rng.hpp"

using namespace msmr;

namespace {

// Every server pushes one message per round and records what it received.
struct Probe {
  struct State {
    std::size_t replies = 0;
    std::size_t pushes = 0;
  };
  using Push = int;

  std::size_t fanout = 2;
  std::vector<std::vector<std::uint8_t>> blocked_log;

  std::size_t push_fanout() const { return fanout; }
  bool answers(const State&) const { return true; }
  bool holds_value(const State& s) const { return s.replies >= 4; }
  std::string serialize(const State& s) const {
    return std::to_string(s.replies) + "/" + std::to_string(s.pushes);
  }
  void begin_round(RoundIndex, std::span<const std::uint8_t> blocked, const std::vector<State>&) {
    blocked_log.emplace_back(blocked.begin(), blocked.end());
  }
  void emit(RoundIndex, std::size_t server, const State&, std::vector<Push>& out) {
    out.push_back(static_cast<int>(server));
  }
  void step(const StepInput<State, Push>& in, State& out) {
    out.replies = in.responders.size();
    out.pushes = in.pushes.size();
  }
  void step_blocked(RoundIndex, std::size_t, const State&, State& out) { out = State{}; }
  void end_round(RoundIndex, std::span<const std::uint8_t>, const std::vector<State>&,
                 std::vector<State>&) {}
};

StrategySpec random_blocking(double beta) {
  StrategySpec s;
  s.kind = StrategyKind::uniform_random;
  s.beta = beta;
  return s;
}

}  // namespace

TEST(Rng, SameKeySameSequence) {
  RngStream a(42, Entity::server, 3, 7, Purpose::pull_targets);
  RngStream b(42, Entity::server, 3, 7, Purpose::pull_targets);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DifferentTagsDiffer) {
  RngStream a(42, Entity::server, 3, 7, Purpose::pull_targets);
  RngStream b(42, Entity::server, 3, 7, Purpose::step);
  RngStream c(42, Entity::server, 4, 7, Purpose::pull_targets);
  RngStream d(42, Entity::client, 3, 7, Purpose::pull_targets);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Rng, UniformStaysInRange) {
  RngStream r(1, Entity::trial, 0, 0, Purpose::sample);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 1000ull, (1ull << 63) + 5}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.uniform(bound), bound);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(DrawTargets, SingleServer) {
  RngStream r(9, Entity::server, 0, 1, Purpose::pull_targets);
  std::vector<std::size_t> t;
  draw_targets(r, 1, 6, t);
  EXPECT_EQ(t, std::vector<std::size_t>(6, 0));
}

TEST(DrawTargets, RepeatableForSameStream) {
  std::vector<std::size_t> a, b;
  RngStream r1(5, Entity::server, 17, 3, Purpose::pull_targets);
  RngStream r2(5, Entity::server, 17, 3, Purpose::pull_targets);
  draw_targets(r1, 1024, 6, a);
  draw_targets(r2, 1024, 6, b);
  EXPECT_EQ(a, b);
}

TEST(DrawTargets, HitFrequenciesWithinFiveSigma) {
  const std::size_t n = 1024, k = 6, draws = 1000000;
  std::vector<std::uint64_t> hits(n, 0);
  std::vector<std::size_t> t;
  for (std::size_t d = 0; d < draws; ++d) {
    RngStream r(2024, Entity::server, d % n, d / n + 1, Purpose::pull_targets);
    draw_targets(r, n, k, t);
    for (auto x : t) ++hits[x];
  }
  const double total = static_cast<double>(draws * k);
  const double p = 1.0 / n;
  const double mean = total * p;
  const double sd = std::sqrt(total * p * (1 - p));
  double chi2 = 0.0;
  for (auto h : hits) {
    EXPECT_LE(std::abs(static_cast<double>(h) - mean), 5 * sd);
    chi2 += (h - mean) * (h - mean) / mean;
  }
  // chi-square with n-1 degrees of freedom: mean n-1, variance 2(n-1)
  EXPECT_LE(std::abs(chi2 - (n - 1)), 5 * std::sqrt(2.0 * (n - 1)));
}

TEST(ChooseSubset, DistinctAndUniform) {
  std::vector<std::size_t> out;
  std::vector<std::uint64_t> counts(6, 0);
  const int reps = 60000;
  for (int i = 0; i < reps; ++i) {
    RngStream r(3, Entity::audit, i, 0, Purpose::sample);
    choose_subset(r, 6, 3, out);
    ASSERT_EQ(out.size(), 3u);
    ASSERT_EQ(std::set<std::size_t>(out.begin(), out.end()).size(), 3u);
    for (auto x : out) ++counts[x];
  }
  // each index is in a 3-of-6 subset with probability 1/2
  const double mean = reps * 0.5, sd = std::sqrt(reps * 0.25);
  for (auto c : counts) EXPECT_LE(std::abs(c - mean), 5 * sd);
}

TEST(Engine, UnblockedRoundDeliversEverything) {
  Probe p;
  p.fanout = 1;
  EngineConfig ec{4, 1, 1, 11, false};
  Engine<Probe> e(ec, p, StrategySpec{}, std::vector<Probe::State>(4));
  e.run_round();
  std::size_t replies = 0, pushes = 0;
  for (const auto& s : e.states()) {
    replies += s.replies;
    pushes += s.pushes;
  }
  EXPECT_EQ(replies, 4u);
  EXPECT_EQ(pushes, 4u);
  EXPECT_EQ(e.round().value, 2u);
}

TEST(Engine, BlockedServerIsSilent) {
  Probe p;
  StrategySpec s;
  s.kind = StrategyKind::permanent_set;
  s.set_size = 1;  // server 1
  EngineConfig ec{4, 6, 1, 5, false};
  Engine<Probe> e(ec, p, s, std::vector<Probe::State>(4));
  for (int r = 0; r < 20; ++r) {
    e.run_round();
    EXPECT_EQ(e.states()[0].replies, 0u);
    EXPECT_EQ(e.states()[0].pushes, 0u);
    EXPECT_TRUE(e.blocked()[0]);
  }
}

TEST(Engine, BlockingTotality) {
  Probe p;
  p.fanout = 3;
  EngineConfig ec{64, 6, 1, 77, false};
  Engine<Probe> e(ec, p, random_blocking(0.3), std::vector<Probe::State>(64));
  for (int r = 0; r < 200; ++r) {
    e.run_round();
    std::size_t blocked = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      blocked += e.blocked()[i];
      EXPECT_FALSE(e.blocked()[i] && e.activity()[i]) << "round " << r + 1 << " server " << i;
    }
    EXPECT_EQ(blocked, 19u);  // floor(0.3 * 64)
  }
}

TEST(Engine, LaggedSnapshots) {
  Probe p;
  EngineConfig ec{4, 6, 3, 1, false};
  Engine<Probe> e(ec, p, StrategySpec{}, std::vector<Probe::State>(4));
  EXPECT_EQ(e.snapshot_for_adversary(RoundIndex{1}).round.value, 1u);
  for (int r = 0; r < 9; ++r) e.run_round();
  EXPECT_EQ(e.snapshot_for_adversary(RoundIndex{10}).round.value, 7u);

  Probe q;
  EngineConfig ec1{4, 6, 1, 1, false};
  Engine<Probe> f(ec1, q, StrategySpec{}, std::vector<Probe::State>(4));
  for (int r = 0; r < 4; ++r) f.run_round();
  EXPECT_EQ(f.snapshot_for_adversary(RoundIndex{5}).round.value, 4u);
  EXPECT_EQ(f.snapshot_for_adversary(RoundIndex{1}).round.value, 1u);
}

TEST(Engine, AdversarySeesOnlyLaggedSnapshot) {
  // Every decision must be reproducible from the archived snapshot of round r - alpha.
  StrategySpec spec;
  spec.kind = StrategyKind::target_useful;
  spec.beta = 0.2;
  for (std::uint64_t alpha : {1u, 2u, 5u}) {
    Probe p;
    const std::size_t n = 128;
    EngineConfig ec{n, 6, alpha, 31, true};
    Engine<Probe> e(ec, p, spec, std::vector<Probe::State>(n, Probe::State{6, 0}));
    for (int r = 0; r < 40; ++r) e.run_round();
    const auto& arch = e.archive();
    for (std::uint64_t r = 1; r <= 40; ++r) {
      const std::uint64_t lag = r > alpha ? r - alpha : 1;
      ASSERT_EQ(arch[lag - 1].round.value, lag);
      const BlockDecision d = choose_blocked(spec, arch[lag - 1], n, RoundIndex{r}, 31);
      std::vector<std::uint8_t> expect(n, 0);
      for (auto id : d.blocked) expect[id.index()] = 1;
      EXPECT_EQ(p.blocked_log[r - 1], expect) << "round " << r;
    }
  }
}

TEST(Engine, DeterministicArchives) {
  ConsensusConfig c;
  c.n = 200;
  c.init.mode = InitMode::binary;
  c.adversary = random_blocking(0.1);
  c.seed = 42;
  c.rounds = 100;
  c.stop_on_agreement = false;
  c.archive = true;
  const auto a = run_consensus(c);
  const auto b = run_consensus(c);
  ASSERT_EQ(a.archive.size(), b.archive.size());
  ASSERT_EQ(a.archive.size(), a.rounds_run + 1);
  for (std::size_t i = 0; i < a.archive.size(); ++i) {
    EXPECT_EQ(a.archive[i].to_json_line(), b.archive[i].to_json_line());
  }
  c.seed = 43;
  const auto d = run_consensus(c);
  bool differs = false;
  for (std::size_t i = 1; i < std::min(a.archive.size(), d.archive.size()); ++i) {
    differs = differs || a.archive[i].to_json_line() != d.archive[i].to_json_line();
  }
  EXPECT_TRUE(differs);
}

TEST(Engine, RejectsMismatchedInitialStates) {
  Probe p;
  EngineConfig ec{4, 6, 1, 1, false};
  EXPECT_THROW(Engine<Probe>(ec, p, StrategySpec{}, std::vector<Probe::State>(3)), ConfigError);
}
