#include <algorithm>
#include <cstring>

#include "msmr/commit.hpp"
#include "msmr/rng.hpp"

namespace msmr {

std::uint64_t SharedState::sn(std::uint64_t client) const {
  auto it = clients.find(client);
  return it == clients.end() ? 0 : it->second.sn;
}

std::size_t DigestHistory::HashKey::operator()(const Hash& h) const noexcept {
  std::size_t v;
  std::memcpy(&v, h.data(), sizeof v);
  return v;
}

void DigestHistory::record(const Hash& parent, const Hash& child) {
  parent_.try_emplace(child, parent);
}

bool DigestHistory::extends(const Hash& earlier, std::uint64_t earlier_count,
                            const Hash& later, std::uint64_t later_count) const {
  if (later_count < earlier_count) return false;
  Hash cur = later;
  for (std::uint64_t i = earlier_count; i < later_count; ++i) {
    auto it = parent_.find(cur);
    if (it == parent_.end()) return false;
    cur = it->second;
  }
  return cur == earlier;
}

bool commit_command(SharedState& s, const Command& cmd, DigestHistory* history) {
  if (!cmd.executable()) return false;
  ClientRecord& rec = s.clients[cmd.client];
  if (cmd.seq != rec.sn + 1) return false;
  const Hash leaf = leaf_hash(cmd);
  const Hash next = extend_digest(s.digest, leaf);
  if (history) history->record(s.digest, next);
  s.digest = next;
  ++s.committed_count;
  rec.sn = cmd.seq;
  rec.ps = s.committed_count;
  on_commit_update(s.cert, cmd);
  return true;
}

AcceptDecision accept_client_command(const SharedState& s, const LogPtr& log,
                                     const Command& cmd) {
  if (!log) return AcceptDecision::ignore;
  const std::uint64_t sn = s.sn(cmd.client);
  if (cmd.seq == sn + 1 && !contains_command(*log, cmd)) return AcceptDecision::spread;
  if (cmd.seq == sn) return AcceptDecision::ack_committed;
  return AcceptDecision::ignore;
}

namespace {

bool has_conflicts(const Log& log, std::vector<std::pair<std::uint64_t, std::uint64_t>>& keys) {
  keys.clear();
  for (const auto& e : log) {
    if (e.cmd.executable()) keys.emplace_back(e.cmd.client, e.cmd.seq);
  }
  std::sort(keys.begin(), keys.end());
  return std::adjacent_find(keys.begin(), keys.end()) != keys.end();
}

}  // namespace

bool nullify_conflicts(Log& log) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> keys;
  if (!has_conflicts(log, keys)) return false;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dup;
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i] == keys[i - 1] && (dup.empty() || dup.back() != keys[i])) dup.push_back(keys[i]);
  }
  Log out;
  out.reserve(log.size());
  std::vector<std::pair<std::uint64_t, std::uint64_t>> placed;
  for (auto& e : log) {
    const std::pair<std::uint64_t, std::uint64_t> key{e.cmd.client, e.cmd.seq};
    if (!e.cmd.executable() || !std::binary_search(dup.begin(), dup.end(), key)) {
      out.push_back(std::move(e));
      continue;
    }
    if (std::find(placed.begin(), placed.end(), key) != placed.end()) continue;
    placed.push_back(key);
    out.push_back(LogEntry{null_command(key.first, key.second), e.birth});
  }
  log = std::move(out);
  return true;
}

CommitResult commit_step(const StatePtr& state, const LogPtr& log, RoundIndex round,
                         std::uint64_t T, DigestHistory* history) {
  CommitResult res{state, log, {}};
  if (!log) return res;
  std::size_t cut = 0;
  while (cut < log->size() && (*log)[cut].birth.value <= round.value &&
         round.value - (*log)[cut].birth.value >= T) {
    ++cut;
  }
  if (cut == 0) return res;
  auto s = std::make_shared<SharedState>(*state);
  for (std::size_t i = 0; i < cut; ++i) {
    commit_command(*s, (*log)[i].cmd, history);
    res.prefix.push_back((*log)[i].cmd);
  }
  auto rest = std::make_shared<Log>(log->begin() + static_cast<std::ptrdiff_t>(cut), log->end());
  if (rest->empty()) rest->push_back(LogEntry{dummy_command(), round});
  res.state = std::move(s);
  res.log = std::move(rest);
  return res;
}

CommitTimings default_commit_timings(std::size_t n, double c_t) {
  CommitTimings t;
  t.t_b = log_budget(c_t, n);
  t.t_m = t.t_b;
  t.T = std::max(2 * t.t_b, t.t_b + t.t_m) + 1;
  return t;
}

// ----- clients -----

ClientPool::ClientPool(const ClientPoolConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  agents_.resize(cfg.clients);
  for (std::size_t c = 0; c < cfg.clients; ++c) {
    Agent& a = agents_[c];
    a.id = c + 1;
    a.start_round = 1 + c * cfg.stagger;
    a.equivocate = c < cfg.equivocating;
    a.done = cfg.commands_per_client == 0;
    for (std::size_t j = 0; j < cfg.commands_per_client; ++j) {
      const std::string base = "c" + std::to_string(a.id) + "-" + std::to_string(j + 1);
      records_.push_back(CommandRecord{Command{a.id, j + 1, CommandKind::normal, base}, {}, {}, {}});
      alt_.push_back(Command{a.id, j + 1, CommandKind::normal, base + "-b"});
    }
    if (!a.done) a.current = records_[record_index(c, 0)].cmd;
  }
}

std::size_t ClientPool::record_index(std::size_t client, std::size_t j) const {
  return client * cfg_.commands_per_client + j;
}

const Command& ClientPool::command(std::size_t client, std::size_t j, bool variant) const {
  const std::size_t idx = record_index(client, j);
  return variant ? alt_[idx] : records_[idx].cmd;
}

void ClientPool::plan(RoundIndex r, std::span<const std::uint8_t> blocked,
                      std::vector<std::vector<std::size_t>>& by_server) {
  const std::size_t n = by_server.size();
  for (std::size_t c = 0; c < agents_.size(); ++c) {
    Agent& a = agents_[c];
    if (a.done || a.start_round > r.value) continue;
    a.current = command(c, a.next, a.equivocate && (r.value % 2 == 0));
    RngStream rng(seed_, Entity::client, c, r.value, Purpose::delivery);
    const std::size_t target = static_cast<std::size_t>(rng.uniform(n));
    if (blocked[target]) continue;
    CommandRecord& rec = records_[record_index(c, a.next)];
    if (!rec.injected_round) rec.injected_round = r.value;
    by_server[target].push_back(c);
  }
}

void ClientPool::acknowledge(std::size_t client, const Command& cmd,
                             const std::optional<AckMaterial>& prev, RoundIndex r) {
  pending_.push_back(PendingAck{client, cmd, prev, r.value});
}

void ClientPool::settle() {
  for (auto& ack : pending_) {
    Agent& a = agents_[ack.client];
    if (a.done || ack.cmd.seq != a.next + 1) continue;
    CommandRecord& rec = records_[record_index(ack.client, a.next)];
    rec.acked_round = ack.round;
    a.store.record_ack(rec.cmd, ack.prev);
    ++acked_total_;
    ++a.next;
    if (a.next == cfg_.commands_per_client) {
      a.done = true;
    } else {
      a.current = records_[record_index(ack.client, a.next)].cmd;
    }
  }
  pending_.clear();
}

void ClientPool::observe_commits(RoundIndex r, const std::vector<std::uint64_t>& min_sn) {
  for (std::size_t c = 0; c < agents_.size(); ++c) {
    for (std::size_t j = 0; j < cfg_.commands_per_client; ++j) {
      CommandRecord& rec = records_[record_index(c, j)];
      if (rec.commit_round) continue;
      if (min_sn[c] >= rec.cmd.seq) {
        rec.commit_round = r.value;
      } else {
        break;
      }
    }
  }
}

bool ClientPool::all_acked() const { return acked_total_ == records_.size(); }

}  // namespace msmr
