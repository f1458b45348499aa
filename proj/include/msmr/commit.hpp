#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "msmr/adversary.hpp"
#include "msmr/certs.hpp"
#include "msmr/command.hpp"
#include "msmr/medianrules.hpp"
#include "msmr/snapshot.hpp"

namespace msmr {

struct ClientRecord {
  std::uint64_t sn = 0;  // last committed sequence number
  std::uint64_t ps = 0;  // committed position of that command
  friend bool operator==(const ClientRecord&, const ClientRecord&) = default;
};

// State every useful server agrees on. The application state is the
// cumulative digest of the committed sequence.
struct SharedState {
  Hash digest{};
  std::uint64_t committed_count = 0;
  std::map<std::uint64_t, ClientRecord> clients;
  ServerCertMeta cert;

  std::uint64_t sn(std::uint64_t client) const;
  friend bool operator==(const SharedState&, const SharedState&) = default;
};
using StatePtr = std::shared_ptr<const SharedState>;

// Records digest transitions so that prefix relations between committed
// sequences can be checked without keeping the sequences.
class DigestHistory {
 public:
  void record(const Hash& parent, const Hash& child);
  // True if the sequence ending in `later` (length later_count) extends the
  // one ending in `earlier` (length earlier_count).
  bool extends(const Hash& earlier, std::uint64_t earlier_count, const Hash& later,
               std::uint64_t later_count) const;

 private:
  struct HashKey {
    std::size_t operator()(const Hash& h) const noexcept;
  };
  std::unordered_map<Hash, Hash, HashKey> parent_;
};

// Executes one committed command. Placeholders are skipped; a command whose
// seq is not sn(c)+1 is dropped. Returns true if executed.
bool commit_command(SharedState& s, const Command& cmd, DigestHistory* history = nullptr);

enum class AcceptDecision { spread, ack_committed, ignore };

AcceptDecision accept_client_command(const SharedState& s, const LogPtr& log, const Command& cmd);

// Distinct commands sharing (client, seq) collapse into one null command at
// the position of the first of them. Returns true if the log changed.
bool nullify_conflicts(Log& log);

struct CommitResult {
  StatePtr state;
  LogPtr log;
  std::vector<Command> prefix;  // the committed prefix, placeholders included
};

// Commits the maximal log prefix whose entries have age >= T; an emptied
// log receives the dummy command.
CommitResult commit_step(const StatePtr& state, const LogPtr& log, RoundIndex round,
                         std::uint64_t T, DigestHistory* history = nullptr);

struct CommitTimings {
  std::uint64_t t_b = 0;
  std::uint64_t t_m = 0;
  std::uint64_t T = 0;
};
CommitTimings default_commit_timings(std::size_t n, double c_t);

// ----- clients -----

struct CommandRecord {
  Command cmd;
  std::optional<std::uint64_t> injected_round;
  std::optional<std::uint64_t> commit_round;
  std::optional<std::uint64_t> acked_round;
};

struct ClientPoolConfig {
  std::size_t clients = 20;
  std::size_t commands_per_client = 10;
  std::uint64_t stagger = 5;        // client c starts at round 1 + c*stagger
  std::size_t equivocating = 0;     // the first `equivocating` clients send two payloads per seq
};

class ClientPool {
 public:
  ClientPool(const ClientPoolConfig& cfg, std::uint64_t seed);

  std::size_t size() const noexcept { return agents_.size(); }
  // Picks a uniformly random server for every client with an outstanding
  // command. Submissions to blocked servers are lost.
  void plan(RoundIndex r, std::span<const std::uint8_t> blocked,
            std::vector<std::vector<std::size_t>>& by_server);
  const Command& submission(std::size_t client) const { return agents_[client].current; }
  void acknowledge(std::size_t client, const Command& cmd, const std::optional<AckMaterial>& prev,
                   RoundIndex r);
  // Applies acks gathered during the round.
  void settle();
  // min_sn[c]: smallest sn(c) over useful servers after the round.
  void observe_commits(RoundIndex r, const std::vector<std::uint64_t>& min_sn);

  bool all_acked() const;
  std::size_t acked_count() const noexcept { return acked_total_; }
  std::size_t total_commands() const noexcept { return records_.size(); }
  std::uint64_t client_id(std::size_t client) const { return agents_[client].id; }
  const ClientCertStore& store(std::size_t client) const { return agents_[client].store; }
  const std::vector<CommandRecord>& records() const noexcept { return records_; }

 private:
  struct Agent {
    std::uint64_t id = 0;
    std::uint64_t start_round = 1;
    bool equivocate = false;
    std::size_t next = 0;  // index of the outstanding command
    bool done = false;
    Command current;
    ClientCertStore store;
  };
  struct PendingAck {
    std::size_t client;
    Command cmd;
    std::optional<AckMaterial> prev;
    std::uint64_t round;
  };

  const Command& command(std::size_t client, std::size_t j, bool variant) const;
  std::size_t record_index(std::size_t client, std::size_t j) const;

  ClientPoolConfig cfg_;
  std::uint64_t seed_;
  std::vector<Agent> agents_;
  std::vector<CommandRecord> records_;
  std::vector<Command> alt_;  // second payloads of equivocating clients
  std::vector<PendingAck> pending_;
  std::size_t acked_total_ = 0;
};

// ----- compact protocol run -----

struct CommitConfig {
  std::size_t n = 512;
  RuleParams params;
  double sigma = 5.0;
  double c_t = 6.0;
  std::uint64_t T = 0;  // 0 = derived from n and c_t
  StrategySpec adversary;
  std::uint64_t alpha = 1;
  std::uint64_t seed = 1;
  std::uint64_t max_rounds = 0;  // 0 = 20*T
  std::uint64_t tail_rounds = 0; // extra rounds after every command is acked
  ClientPoolConfig clients;
  bool audit_logs = true;
  bool check_certificates = false;
  std::size_t cert_servers = 5;
  std::size_t mutations = 10000;
  bool archive = false;
};

struct CommitRow {
  std::uint64_t round = 0;
  std::size_t useful_count = 0;
  std::uint64_t committed_count = 0;  // on useful servers after the round
  std::size_t distinct_digests = 0;
};

struct CertificateStats {
  std::uint64_t checked = 0;
  std::uint64_t accepted = 0;
  std::size_t checkpoints = 0;
  std::uint64_t mutations = 0;
  std::uint64_t mutations_accepted = 0;
  std::uint64_t storage_violations = 0;
};

struct CommitReport {
  std::uint64_t T = 0;
  std::vector<CommitRow> series;
  std::vector<CommandRecord> commands;
  std::uint64_t safety_violations = 0;      // rounds with disagreeing useful digests
  std::uint64_t validity_violations = 0;
  std::uint64_t repetition_violations = 0;
  std::uint64_t shrinkage_violations = 0;
  std::uint64_t catch_up_events = 0;
  std::uint64_t rounds_run = 0;
  bool all_acked = false;
  CertificateStats certs;
  // First command committed under each (client, seq), and the number of
  // commits that disagreed with it.
  std::map<std::pair<std::uint64_t, std::uint64_t>, Command> committed_commands;
  std::uint64_t conflicting_commits = 0;
  std::vector<WorldSnapshot> archive;
};

CommitReport run_commit(const CommitConfig& config);

}  // namespace msmr
