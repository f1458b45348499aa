#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msmr/command.hpp"
#include "msmr/hash.hpp"

namespace msmr {

// Side on which the sibling hash sits.
enum class Side : std::uint8_t { left = 0, right = 1 };

struct ChainLink {
  Side side = Side::right;
  Hash hash{};
  friend bool operator==(const ChainLink&, const ChainLink&) = default;
};
using HashChain = std::vector<ChainLink>;

struct Peak {
  unsigned height = 0;
  Hash hash{};
  friend bool operator==(const Peak&, const Peak&) = default;
};

// One perfect tree per set bit of the leaf count, heights strictly
// decreasing left to right. Positions are 1-based.
class MerkleForest {
 public:
  std::uint64_t size() const noexcept { return size_; }
  const std::vector<Peak>& peaks() const noexcept { return peaks_; }

  // on_merge(height, left_node_index, left_hash, right_hash) fires for every
  // carry merge, bottom up. Node indices count nodes of that height from 0.
  template <class OnMerge>
  void append(const Hash& leaf, OnMerge&& on_merge) {
    std::uint64_t index = size_;  // node index of the new leaf at height 0
    Peak cur{0, leaf};
    while (!peaks_.empty() && peaks_.back().height == cur.height) {
      const Peak left = peaks_.back();
      peaks_.pop_back();
      on_merge(cur.height, index - 1, left.hash, cur.hash);
      cur = Peak{cur.height + 1, node_hash(left.hash, cur.hash)};
      index = (index - 1) / 2;
    }
    peaks_.push_back(cur);
    ++size_;
  }
  void append(const Hash& leaf) {
    append(leaf, [](unsigned, std::uint64_t, const Hash&, const Hash&) {});
  }

  // Node index (at the peak's height) of each peak.
  std::vector<std::uint64_t> peak_indices() const;

  friend bool operator==(const MerkleForest&, const MerkleForest&) = default;

 private:
  std::uint64_t size_ = 0;
  std::vector<Peak> peaks_;
};

struct StoredCommit {
  std::uint64_t seq = 0;
  std::uint64_t position = 0;
  Hash leaf{};
  HashChain chain;
  friend bool operator==(const StoredCommit&, const StoredCommit&) = default;
};

struct ClientCommits {
  std::optional<StoredCommit> previous;
  std::optional<StoredCommit> latest;
  friend bool operator==(const ClientCommits&, const ClientCommits&) = default;
};

// Per-server certificate metadata: the forest roots plus, per client, the
// last two committed commands with their (growing) hash chains.
struct ServerCertMeta {
  MerkleForest forest;
  std::map<std::uint64_t, ClientCommits> clients;
  friend bool operator==(const ServerCertMeta&, const ServerCertMeta&) = default;
};

// Appends a committed command to the forest and extends stored chains.
void on_commit_update(ServerCertMeta& meta, const Command& cmd);

// Peaks within popcount(m) and every stored chain within bit_width(m).
bool storage_within_bounds(const ServerCertMeta& meta);

struct AckMaterial {
  std::uint64_t seq = 0;  // the previous command's sequence number
  std::uint64_t position = 0;
  HashChain chain;
};
// Chain of the client's previous committed command, piggybacked on acks.
std::optional<AckMaterial> ack_material(const ServerCertMeta& meta, std::uint64_t client);

struct Certificate {
  Command x;
  std::optional<std::uint64_t> position;  // absent for the client's latest command
  HashChain chain;
  friend bool operator==(const Certificate&, const Certificate&) = default;
};

enum class Verdict {
  accept,
  root_mismatch,
  side_inconsistent,
  chain_too_short,
  unknown_client,
  malformed,
};
std::string to_string(Verdict v);

Verdict verify_certificate(const ServerCertMeta& meta, const Certificate& cert);

// Strict binary form: command encoding, u8 has_position, [u64 position],
// u32 chain length, then per link u8 side and 32 hash bytes.
std::string encode_certificate(const Certificate& cert);
std::optional<Certificate> decode_certificate(const std::string& bytes);

// Client-side store of acknowledged commands and received chains.
class ClientCertStore {
 public:
  // Records the ack of `cmd`; `prev` is the piggybacked chain (if any).
  // A duplicate chain for the same command keeps the longer one.
  void record_ack(const Command& cmd, const std::optional<AckMaterial>& prev);
  // Drops a received chain, simulating a lost ack payload.
  void forget_chain(std::uint64_t seq) { chains_.erase(seq); }

  std::uint64_t latest_acked() const noexcept { return latest_; }
  const std::map<std::uint64_t, Command>& commands() const noexcept { return commands_; }
  const std::map<std::uint64_t, AckMaterial>& chains() const noexcept { return chains_; }

 private:
  std::map<std::uint64_t, Command> commands_;
  std::map<std::uint64_t, AckMaterial> chains_;
  std::uint64_t latest_ = 0;
};

struct MergeOutcome {
  std::optional<Certificate> certificate;      // absent when the base chain is missing
  std::optional<std::uint64_t> gap;            // first missing later chain, if any
};

// Builds a certificate for the client's command `seq` by splicing later
// chains onto its own at their junctions.
MergeOutcome client_merge_chain(const ClientCertStore& store, std::uint64_t seq);

}  // namespace msmr
