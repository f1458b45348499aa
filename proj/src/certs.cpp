#include "msmr/certs.hpp"

#include <bit>

namespace msmr {

namespace {

Side expected_side(std::uint64_t node_index) {
  return (node_index & 1) ? Side::left : Side::right;
}

Hash fold(const Hash& leaf, const HashChain& chain, std::size_t levels) {
  Hash h = leaf;
  for (std::size_t i = 0; i < levels; ++i) {
    h = chain[i].side == Side::left ? node_hash(chain[i].hash, h) : node_hash(h, chain[i].hash);
  }
  return h;
}

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  bool get(std::uint64_t& v, int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > s_.size()) return false;
    v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return true;
  }
  bool get_bytes(std::string& out, std::size_t len) {
    if (pos_ + len > s_.size()) return false;
    out.assign(s_, pos_, len);
    pos_ += len;
    return true;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint64_t> MerkleForest::peak_indices() const {
  std::vector<std::uint64_t> out;
  std::uint64_t start = 0;
  for (const auto& p : peaks_) {
    out.push_back(start >> p.height);
    start += std::uint64_t{1} << p.height;
  }
  return out;
}

void on_commit_update(ServerCertMeta& meta, const Command& cmd) {
  const Hash leaf = leaf_hash(cmd);
  ClientCommits& slot = meta.clients[cmd.client];
  slot.previous = std::move(slot.latest);
  slot.latest = StoredCommit{cmd.seq, meta.forest.size() + 1, leaf, {}};

  meta.forest.append(leaf, [&](unsigned height, std::uint64_t left_index, const Hash& l,
                               const Hash& r) {
    for (auto& [client, commits] : meta.clients) {
      for (auto* stored : {&commits.previous, &commits.latest}) {
        if (!*stored) continue;
        StoredCommit& s = **stored;
        if (s.chain.size() != height) continue;
        const std::uint64_t top = (s.position - 1) >> height;
        if (top == left_index) {
          s.chain.push_back(ChainLink{Side::right, r});
        } else if (top == left_index + 1) {
          s.chain.push_back(ChainLink{Side::left, l});
        }
      }
    }
  });
}

bool storage_within_bounds(const ServerCertMeta& meta) {
  const std::uint64_t m = meta.forest.size();
  if (meta.forest.peaks().size() != static_cast<std::size_t>(std::popcount(m))) return false;
  const std::size_t max_chain = static_cast<std::size_t>(std::bit_width(m));
  for (const auto& [client, commits] : meta.clients) {
    for (const auto* stored : {&commits.previous, &commits.latest}) {
      if (*stored && (*stored)->chain.size() > max_chain) return false;
    }
  }
  return true;
}

std::optional<AckMaterial> ack_material(const ServerCertMeta& meta, std::uint64_t client) {
  auto it = meta.clients.find(client);
  if (it == meta.clients.end() || !it->second.previous) return std::nullopt;
  const StoredCommit& p = *it->second.previous;
  return AckMaterial{p.seq, p.position, p.chain};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::root_mismatch: return "root_mismatch";
    case Verdict::side_inconsistent: return "side_inconsistent";
    case Verdict::chain_too_short: return "chain_too_short";
    case Verdict::unknown_client: return "unknown_client";
    case Verdict::malformed: return "malformed";
  }
  return "malformed";
}

Verdict verify_certificate(const ServerCertMeta& meta, const Certificate& cert) {
  auto it = meta.clients.find(cert.x.client);
  if (it == meta.clients.end()) return Verdict::unknown_client;
  const ClientCommits& commits = it->second;
  const Hash leaf = leaf_hash(cert.x);

  if (!cert.position) {
    if (!cert.chain.empty()) return Verdict::side_inconsistent;
    for (const auto* stored : {&commits.latest, &commits.previous}) {
      if (*stored && (*stored)->leaf == leaf) return Verdict::accept;
    }
    return Verdict::chain_too_short;
  }

  const std::uint64_t p = *cert.position;
  if (p < 1 || p > meta.forest.size()) return Verdict::side_inconsistent;
  const std::uint64_t idx = p - 1;
  if (cert.chain.size() >= 64) return Verdict::side_inconsistent;
  Hash h = leaf;
  for (std::size_t level = 0; level < cert.chain.size(); ++level) {
    const ChainLink& link = cert.chain[level];
    if (link.side != expected_side(idx >> level)) return Verdict::side_inconsistent;
    h = link.side == Side::left ? node_hash(link.hash, h) : node_hash(h, link.hash);
  }
  const std::size_t height = cert.chain.size();
  const std::uint64_t node = idx >> height;

  const auto& peaks = meta.forest.peaks();
  const auto indices = meta.forest.peak_indices();
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (peaks[i].height == height && indices[i] == node) {
      return peaks[i].hash == h ? Verdict::accept : Verdict::root_mismatch;
    }
  }

  for (const auto* stored : {&commits.latest, &commits.previous}) {
    if (!*stored) continue;
    const StoredCommit& s = **stored;
    const std::uint64_t s_node = (s.position - 1) >> height;
    if (s_node == node && s.chain.size() >= height) {
      return fold(s.leaf, s.chain, height) == h ? Verdict::accept : Verdict::root_mismatch;
    }
    if (s_node == (node ^ 1) && s.chain.size() > height) {
      return s.chain[height].hash == h ? Verdict::accept : Verdict::root_mismatch;
    }
  }
  return Verdict::chain_too_short;
}

std::string encode_certificate(const Certificate& cert) {
  std::string out = encode_command(cert.x);
  out.push_back(cert.position ? 1 : 0);
  if (cert.position) put_le(out, *cert.position, 8);
  put_le(out, cert.chain.size(), 4);
  for (const auto& link : cert.chain) {
    out.push_back(static_cast<char>(link.side));
    out.append(reinterpret_cast<const char*>(link.hash.data()), link.hash.size());
  }
  return out;
}

std::optional<Certificate> decode_certificate(const std::string& bytes) {
  Reader rd(bytes);
  Certificate c;
  std::uint64_t v = 0;
  if (!rd.get(c.x.client, 8) || !rd.get(c.x.seq, 8) || !rd.get(v, 1) || v > 2) return std::nullopt;
  c.x.kind = static_cast<CommandKind>(v);
  if (!rd.get(v, 4) || !rd.get_bytes(c.x.payload, v)) return std::nullopt;
  if (!rd.get(v, 1) || v > 1) return std::nullopt;
  if (v == 1) {
    std::uint64_t p = 0;
    if (!rd.get(p, 8)) return std::nullopt;
    c.position = p;
  }
  std::uint64_t len = 0;
  if (!rd.get(len, 4) || len > 64) return std::nullopt;
  for (std::uint64_t i = 0; i < len; ++i) {
    ChainLink link;
    std::uint64_t side = 0;
    std::string raw;
    if (!rd.get(side, 1) || side > 1 || !rd.get_bytes(raw, 32)) return std::nullopt;
    link.side = static_cast<Side>(side);
    std::copy(raw.begin(), raw.end(), link.hash.begin());
    c.chain.push_back(link);
  }
  if (!rd.done()) return std::nullopt;
  return c;
}

void ClientCertStore::record_ack(const Command& cmd, const std::optional<AckMaterial>& prev) {
  commands_[cmd.seq] = cmd;
  if (cmd.seq > latest_) latest_ = cmd.seq;
  if (!prev) return;
  auto it = chains_.find(prev->seq);
  if (it == chains_.end() || it->second.chain.size() < prev->chain.size()) {
    chains_[prev->seq] = *prev;
  }
}

MergeOutcome client_merge_chain(const ClientCertStore& store, std::uint64_t seq) {
  MergeOutcome out;
  auto cmd_it = store.commands().find(seq);
  if (cmd_it == store.commands().end()) return out;
  if (seq == store.latest_acked()) {
    out.certificate = Certificate{cmd_it->second, std::nullopt, {}};
    return out;
  }
  auto base = store.chains().find(seq);
  if (base == store.chains().end()) {
    out.gap = seq;
    return out;
  }
  const std::uint64_t idx = base->second.position - 1;
  HashChain chain = base->second.chain;

  for (std::uint64_t m = seq + 1; m < store.latest_acked(); ++m) {
    if (!store.chains().count(m) && !out.gap) out.gap = m;
  }

  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = store.chains().upper_bound(seq); it != store.chains().end(); ++it) {
      const AckMaterial& other = it->second;
      auto other_cmd = store.commands().find(it->first);
      if (other_cmd == store.commands().end()) continue;
      const std::size_t h = chain.size();
      const std::uint64_t node = idx >> h;
      const std::uint64_t other_idx = other.position - 1;
      if ((other_idx >> h) == node) {
        if (other.chain.size() > h) {
          chain.insert(chain.end(), other.chain.begin() + static_cast<std::ptrdiff_t>(h),
                       other.chain.end());
          progress = true;
        }
      } else if ((other_idx >> (h + 1)) == (node >> 1) && other.chain.size() >= h) {
        const Hash sibling = fold(leaf_hash(other_cmd->second), other.chain, h);
        chain.push_back(ChainLink{expected_side(node), sibling});
        if (other.chain.size() > h + 1) {
          chain.insert(chain.end(), other.chain.begin() + static_cast<std::ptrdiff_t>(h + 1),
                       other.chain.end());
        }
        progress = true;
      }
    }
  }
  out.certificate = Certificate{cmd_it->second, base->second.position, std::move(chain)};
  return out;
}

}  // namespace msmr
