#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "msmr/smrlog.hpp"

using namespace msmr;

namespace {

Command cmd(std::uint64_t client, std::uint64_t seq, std::string payload = "") {
  return Command{client, seq, CommandKind::normal, payload.empty() ? "c" + std::to_string(client) + "s" + std::to_string(seq) : payload};
}

LogPtr make(std::vector<Command> cs, std::uint64_t birth = 1) {
  Log l;
  l.push_back(LogEntry{seed_command(), RoundIndex{0}});
  for (auto& c : cs) l.push_back(LogEntry{c, RoundIndex{birth}});
  return std::make_shared<const Log>(std::move(l));
}

std::vector<Command> commands(const LogPtr& l) {
  std::vector<Command> out;
  for (const auto& e : *l) out.push_back(e.cmd);
  return out;
}

// Oracle: sort by command sequences only, then take the middle element.
LogPtr brute_median(std::vector<LogPtr> logs) {
  std::sort(logs.begin(), logs.end(), [](const LogPtr& a, const LogPtr& b) {
    return std::lexicographical_compare(a->begin(), a->end(), b->begin(), b->end(),
                                        [](const LogEntry& x, const LogEntry& y) { return x.cmd < y.cmd; });
  });
  return logs[logs.size() / 2];
}

}  // namespace

TEST(LexCompare, Examples) {
  const Command a = cmd(1, 1), b = cmd(2, 1), c = cmd(3, 1);
  EXPECT_EQ(lex_compare(*make({}), *make({a})), std::strong_ordering::less);
  EXPECT_EQ(lex_compare(*make({a, c}), *make({b})), std::strong_ordering::less);
  EXPECT_EQ(lex_compare(*make({a, b}), *make({a, b})), std::strong_ordering::equal);
  EXPECT_EQ(lex_compare(*make({b}), *make({a, c})), std::strong_ordering::greater);
  // births only break ties between equal command sequences
  const Log early{{seed_command(), RoundIndex{0}}, {a, RoundIndex{1}}, {c, RoundIndex{1}}};
  const Log late{{seed_command(), RoundIndex{0}}, {a, RoundIndex{9}}, {b, RoundIndex{9}}};
  EXPECT_EQ(lex_compare(late, early), std::strong_ordering::less);
  const Log late_same{{seed_command(), RoundIndex{0}}, {a, RoundIndex{9}}, {c, RoundIndex{1}}};
  EXPECT_EQ(lex_compare(early, late_same), std::strong_ordering::less);
}

TEST(ExtendedMedian, HandExample) {
  const Command a = cmd(1, 1), b = cmd(2, 1);
  std::vector<LogPtr> m = {make({a}), make({b}), make({a})};
  const LogPtr out = extended_median_of(m, {});
  EXPECT_EQ(commands(out), (std::vector<Command>{seed_command(), a, b}));
  EXPECT_EQ(commands(brute_median(m)), (std::vector<Command>{seed_command(), a}));
}

TEST(ExtendedMedian, TooFewRepliesGiveBottom) {
  RngStream rng(1, Entity::server, 0, 1, Purpose::step);
  std::vector<LogPtr> two = {make({}), make({})};
  EXPECT_EQ(extended_median_step(two, {}, RuleParams{6, 3}, rng), nullptr);
}

TEST(ExtendedMedian, IdenticalLogsUnchanged) {
  const LogPtr l = make({cmd(1, 1), cmd(2, 1)});
  std::vector<LogPtr> m = {l, l, l};
  const LogPtr out = extended_median_of(m, {});
  EXPECT_EQ(out.get(), l.get());
}

TEST(ExtendedMedian, AppendsGoToTheEndInCommandOrder) {
  const LogPtr l = make({cmd(5, 1)});
  const LogEntry late{cmd(9, 1), RoundIndex{4}};
  const LogEntry early{cmd(2, 1), RoundIndex{4}};
  const LogEntry dup{cmd(5, 1), RoundIndex{4}};
  std::vector<const LogEntry*> appends = {&late, &early, &dup};
  std::vector<LogPtr> m = {l, l, l};
  const LogPtr out = extended_median_of(m, appends);
  EXPECT_EQ(commands(out), (std::vector<Command>{seed_command(), cmd(5, 1), cmd(2, 1), cmd(9, 1)}));
  EXPECT_EQ((*out)[1].birth.value, 1u);  // median entry keeps its birth round
}

TEST(ExtendedMedian, BirthRoundsFromMedianOrMinimum) {
  const Command a = cmd(1, 1), b = cmd(2, 1);
  Log l1{{seed_command(), RoundIndex{0}}, {a, RoundIndex{5}}};
  Log l2{{seed_command(), RoundIndex{0}}, {a, RoundIndex{3}}, {b, RoundIndex{7}}};
  Log l3{{seed_command(), RoundIndex{0}}, {b, RoundIndex{2}}};
  std::vector<LogPtr> m = {std::make_shared<const Log>(l1), std::make_shared<const Log>(l2),
                           std::make_shared<const Log>(l3)};
  // command order: (x0,a) < (x0,a,b) < (x0,b); median (x0,a,b) with a@3, b@7
  const LogPtr out = extended_median_of(m, {});
  ASSERT_EQ(out->size(), 3u);
  EXPECT_EQ((*out)[1].birth.value, 3u);
  EXPECT_EQ((*out)[2].birth.value, 7u);
  // b missing from the median: minimum birth among sources
  const Log l4{{seed_command(), RoundIndex{0}}, {b, RoundIndex{9}}};
  std::vector<LogPtr> m3 = {std::make_shared<const Log>(l1), std::make_shared<const Log>(l1),
                            std::make_shared<const Log>(l4)};
  const LogPtr out3 = extended_median_of(m3, {});
  ASSERT_EQ(out3->size(), 3u);
  EXPECT_EQ((*out3)[2].cmd, b);
  EXPECT_EQ((*out3)[2].birth.value, 9u);
}

TEST(ExtendedMedian, RandomizedAgainstOracle) {
  // property: the result starts with the brute-force median, has no repeats,
  // and holds exactly the union of commands of M plus appends
  RngStream gen(5, Entity::audit, 0, 0, Purpose::sample);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LogPtr> m;
    std::set<Command> universe;
    for (int j = 0; j < 3; ++j) {
      std::vector<Command> cs;
      std::set<std::uint64_t> used;
      const auto len = gen.uniform(5);
      for (std::uint64_t t = 0; t < len; ++t) {
        const auto c = gen.uniform(6) + 1;
        if (!used.insert(c).second) continue;
        cs.push_back(cmd(c, 1));
      }
      m.push_back(make(cs, 1 + gen.uniform(3)));
      for (auto& c : cs) universe.insert(c);
    }
    const LogEntry app{cmd(gen.uniform(8) + 1, 1), RoundIndex{9}};
    std::vector<const LogEntry*> appends = {&app};
    universe.insert(app.cmd);
    universe.insert(seed_command());
    const LogPtr out = extended_median_of(m, appends);
    const LogPtr median = brute_median(m);
    ASSERT_GE(out->size(), median->size());
    for (std::size_t i = 0; i < median->size(); ++i) EXPECT_EQ((*out)[i].cmd, (*median)[i].cmd);
    std::set<Command> got;
    for (const auto& e : *out) EXPECT_TRUE(got.insert(e.cmd).second) << "repeated command";
    EXPECT_EQ(got, universe);
    for (std::size_t i = median->size() + 1; i < out->size(); ++i) {
      EXPECT_LT((*out)[i - 1].cmd, (*out)[i].cmd);
    }
  }
}

TEST(AppendFanout, CeilSigmaLog) {
  EXPECT_EQ(append_fanout(5.0, 1024), 50u);
  EXPECT_EQ(append_fanout(5.0, 512), 45u);
  EXPECT_EQ(append_fanout(1.0, 1000), 10u);
}

TEST(Smr, NoInjectionsKeepsSeedLog) {
  SmrConfig c;
  c.n = 64;
  c.rounds = 50;
  const auto r = run_smr(c);
  for (const auto& row : r.series) {
    EXPECT_EQ(row.max_log_length, 1u);
    EXPECT_EQ(row.distinct_logs, 1u);
  }
}

TEST(Smr, CommandsStabilizeWithCleanAudits) {
  SmrConfig c;
  c.n = 256;
  c.adversary.kind = StrategyKind::uniform_random;
  c.adversary.beta = 0.1;
  c.seed = 3;
  c.rounds = 250;
  c.injections = staggered_injections(4, 5, 3, 10);
  const auto r = run_smr(c);
  EXPECT_EQ(r.validity_violations, 0u);
  EXPECT_EQ(r.repetition_violations, 0u);
  EXPECT_EQ(r.shrinkage_violations, 0u);
  ASSERT_EQ(r.outcomes.size(), 20u);
  for (const auto& o : r.outcomes) {
    EXPECT_TRUE(o.injected_round) << o.cmd.to_string();
    EXPECT_TRUE(o.broadcast_round) << o.cmd.to_string();
    EXPECT_TRUE(o.stable_round) << o.cmd.to_string();
  }
}

TEST(Smr, InjectionToBlockedServerIsLost) {
  // everyone blocked in rounds 1-5: the command cannot be injected before round 6
  SmrConfig c;
  c.n = 64;
  c.adversary.kind = StrategyKind::surge_schedule;
  c.adversary.schedule = {Phase{1, 5, 1.0}};
  c.rounds = 20;
  c.injections = {Injection{1, cmd(1, 1)}};
  const auto r = run_smr(c);
  ASSERT_EQ(r.outcomes.size(), 1u);
  // all logs are bottom after the surge, so no server can take the command
  EXPECT_FALSE(r.outcomes[0].injected_round && *r.outcomes[0].injected_round <= 5);
}
