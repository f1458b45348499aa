#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "msmr/commit.hpp"

#ifndef MSMR_GOLDEN_FILE
#error "MSMR_GOLDEN_FILE must be defined"
#endif

using namespace msmr;

namespace {

Command cmd(std::uint64_t client, std::uint64_t seq, std::string payload = "p") {
  return Command{client, seq, CommandKind::normal, std::move(payload)};
}

LogPtr log_of(std::vector<LogEntry> entries) { return std::make_shared<const Log>(std::move(entries)); }

nlohmann::json golden() {
  std::ifstream in(MSMR_GOLDEN_FILE);
  return nlohmann::json::parse(in);
}

Command golden_command(const nlohmann::json& j) {
  return Command{j.at("client").get<std::uint64_t>(), j.at("seq").get<std::uint64_t>(),
                 static_cast<CommandKind>(j.at("kind").get<int>()), j.at("payload").get<std::string>()};
}

}  // namespace

TEST(CommitStep, CommitsOnlyOldEnoughPrefix) {
  const auto s0 = std::make_shared<const SharedState>();
  const Command a = cmd(1, 1), b = cmd(2, 1);
  // births 1, 2, 8 with T = 5 at round 7: the first two have age >= 5
  const LogPtr l = log_of({{seed_command(), RoundIndex{1}}, {a, RoundIndex{2}}, {b, RoundIndex{8}}});
  const auto r = commit_step(s0, l, RoundIndex{7}, 5);
  ASSERT_EQ(r.prefix.size(), 2u);
  EXPECT_EQ(r.prefix[1], a);
  EXPECT_EQ(r.state->committed_count, 1u);  // the seed is a placeholder
  EXPECT_EQ(r.state->sn(1), 1u);
  ASSERT_EQ(r.log->size(), 1u);
  EXPECT_EQ((*r.log)[0].cmd, b);
}

TEST(CommitStep, YoungHeadBlocksEverything) {
  const auto s0 = std::make_shared<const SharedState>();
  const LogPtr l = log_of({{cmd(1, 1), RoundIndex{6}}, {cmd(2, 1), RoundIndex{1}}});
  const auto r = commit_step(s0, l, RoundIndex{7}, 5);
  EXPECT_TRUE(r.prefix.empty());
  EXPECT_EQ(r.log.get(), l.get());
  EXPECT_EQ(r.state.get(), s0.get());
}

TEST(CommitStep, EmptiedLogGetsDummy) {
  const auto s0 = std::make_shared<const SharedState>();
  const LogPtr l = log_of({{cmd(1, 1), RoundIndex{1}}});
  const auto r = commit_step(s0, l, RoundIndex{10}, 3);
  ASSERT_EQ(r.log->size(), 1u);
  EXPECT_EQ((*r.log)[0].cmd, dummy_command());
  EXPECT_EQ((*r.log)[0].birth.value, 10u);
  EXPECT_EQ(commit_step(s0, nullptr, RoundIndex{10}, 3).log, nullptr);
}

TEST(CommitCommand, DropsOutOfOrderSequence) {
  SharedState s;
  EXPECT_FALSE(commit_command(s, cmd(4, 2)));
  EXPECT_TRUE(commit_command(s, cmd(4, 1)));
  EXPECT_FALSE(commit_command(s, cmd(4, 1, "again")));
  EXPECT_FALSE(commit_command(s, seed_command()));
  EXPECT_TRUE(commit_command(s, cmd(4, 2)));
  EXPECT_EQ(s.committed_count, 2u);
  EXPECT_EQ(s.clients.at(4).sn, 2u);
  EXPECT_EQ(s.clients.at(4).ps, 2u);
}

TEST(CommitCommand, DigestsMatchGoldenVectors) {
  const auto g = golden();
  SharedState s;
  DigestHistory h;
  std::vector<Hash> seen;
  for (std::size_t i = 0; i < g["commands"].size(); ++i) {
    ASSERT_TRUE(commit_command(s, golden_command(g["commands"][i]), &h)) << i;
    EXPECT_EQ(to_hex(s.digest), g["digests"][i].get<std::string>()) << i;
    seen.push_back(s.digest);
  }
  EXPECT_TRUE(h.extends(Hash{}, 0, seen.back(), seen.size()));
  EXPECT_TRUE(h.extends(seen[3], 4, seen[10], 11));
  EXPECT_FALSE(h.extends(seen[3], 4, seen[10], 10));
  EXPECT_FALSE(h.extends(seen[10], 11, seen[3], 4));
}

TEST(CommitCommand, DivergentHistoriesDoNotExtend) {
  SharedState a, b;
  DigestHistory h;
  commit_command(a, cmd(1, 1, "x"), &h);
  commit_command(b, cmd(1, 1, "y"), &h);
  commit_command(b, cmd(1, 2), &h);
  EXPECT_FALSE(h.extends(a.digest, 1, b.digest, 2));
}

TEST(AcceptClientCommand, Decisions) {
  SharedState s;
  commit_command(s, cmd(3, 1));
  const LogPtr l = log_of({{seed_command(), RoundIndex{0}}, {cmd(3, 2, "held"), RoundIndex{4}}});
  EXPECT_EQ(accept_client_command(s, l, cmd(3, 2, "new")), AcceptDecision::spread);
  EXPECT_EQ(accept_client_command(s, l, cmd(3, 2, "held")), AcceptDecision::ignore);
  EXPECT_EQ(accept_client_command(s, l, cmd(3, 1)), AcceptDecision::ack_committed);
  EXPECT_EQ(accept_client_command(s, l, cmd(3, 5)), AcceptDecision::ignore);
  EXPECT_EQ(accept_client_command(s, nullptr, cmd(3, 2)), AcceptDecision::ignore);
  EXPECT_EQ(accept_client_command(s, l, cmd(9, 1)), AcceptDecision::spread);
}

TEST(NullifyConflicts, SingleNullAtFirstOccurrence) {
  Log l{{seed_command(), RoundIndex{0}},
        {cmd(1, 1, "b"), RoundIndex{3}},
        {cmd(2, 1), RoundIndex{4}},
        {cmd(1, 1, "a"), RoundIndex{5}},
        {cmd(1, 1, "c"), RoundIndex{6}}};
  EXPECT_TRUE(nullify_conflicts(l));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[1].cmd, null_command(1, 1));
  EXPECT_EQ(l[1].birth.value, 3u);
  EXPECT_EQ(l[2].cmd, cmd(2, 1));
  EXPECT_FALSE(nullify_conflicts(l));
}

TEST(NullifyConflicts, EquivocatorCommitsNeitherPayload) {
  // the null takes the (client, seq) slot, so neither payload is executed
  Log l{{cmd(1, 1, "a"), RoundIndex{1}}, {cmd(1, 1, "b"), RoundIndex{1}}};
  nullify_conflicts(l);
  const auto r = commit_step(std::make_shared<const SharedState>(), log_of(l), RoundIndex{20}, 5);
  ASSERT_EQ(r.prefix.size(), 1u);
  EXPECT_EQ(r.prefix[0].kind, CommandKind::null);
  EXPECT_EQ(r.state->sn(1), 1u);
  SharedState s = *r.state;
  EXPECT_FALSE(commit_command(s, cmd(1, 1, "a")));
  EXPECT_FALSE(commit_command(s, cmd(1, 1, "b")));
}

TEST(Timings, DefaultsForFiveTwelve) {
  const auto t = default_commit_timings(512, 6.0);
  EXPECT_EQ(t.t_b, 54u);
  EXPECT_EQ(t.t_m, 54u);
  EXPECT_EQ(t.T, 109u);
}

TEST(RunCommit, SmallRunIsSafeAndLive) {
  CommitConfig c;
  c.n = 128;
  c.adversary.kind = StrategyKind::uniform_random;
  c.adversary.beta = 0.1;
  c.seed = 11;
  c.clients = ClientPoolConfig{6, 3, 4, 1};
  c.check_certificates = true;
  c.cert_servers = 2;
  c.mutations = 200;
  const auto r = run_commit(c);
  EXPECT_EQ(r.T, default_commit_timings(128, 6.0).T);
  EXPECT_EQ(r.safety_violations, 0u);
  EXPECT_EQ(r.conflicting_commits, 0u);
  EXPECT_EQ(r.validity_violations, 0u);
  EXPECT_EQ(r.repetition_violations, 0u);
  EXPECT_EQ(r.shrinkage_violations, 0u);
  EXPECT_TRUE(r.all_acked);
  for (const auto& rec : r.commands) {
    if (rec.cmd.client == 1) continue;  // equivocator: its slots hold nulls
    ASSERT_TRUE(rec.commit_round) << rec.cmd.to_string();
    ASSERT_TRUE(rec.acked_round) << rec.cmd.to_string();
    EXPECT_LE(*rec.injected_round, *rec.commit_round);
  }
  EXPECT_EQ(r.certs.accepted, r.certs.checked);
  EXPECT_EQ(r.certs.mutations_accepted, 0u);
  EXPECT_EQ(r.certs.storage_violations, 0u);
  // committed count never drops on useful servers
  std::uint64_t prev = 0;
  for (const auto& row : r.series) {
    if (row.useful_count == 0) continue;
    EXPECT_GE(row.committed_count, prev);
    EXPECT_EQ(row.distinct_digests, 1u);
    prev = row.committed_count;
  }
}

TEST(RunCommit, Deterministic) {
  CommitConfig c;
  c.n = 64;
  c.adversary.kind = StrategyKind::uniform_random;
  c.adversary.beta = 0.1;
  c.clients = ClientPoolConfig{3, 2, 2, 0};
  const auto a = run_commit(c);
  const auto b = run_commit(c);
  ASSERT_EQ(a.series.size(), b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    EXPECT_EQ(a.series[i].committed_count, b.series[i].committed_count);
    EXPECT_EQ(a.series[i].useful_count, b.series[i].useful_count);
  }
}
