#include <gtest/gtest.h>

#include <bit>
#include <fstream>
#include <map>
#include <json.hpp>

#include "msmr/acceptance.hpp"
#include "msmr/certs.hpp"

#ifndef MSMR_GOLDEN_FILE
#error "MSMR_GOLDEN_FILE must be defined"
#endif

using namespace msmr;

namespace {

Command cmd(std::uint64_t client, std::uint64_t seq) {
  return Command{client, seq, CommandKind::normal, "x" + std::to_string(client) + "." + std::to_string(seq)};
}

// Oracle: roots of perfect subtrees computed top-down from the leaf list.
class RecursiveForest {
 public:
  explicit RecursiveForest(const std::vector<Hash>& leaves) : leaves_(leaves) {}

  Hash root(std::uint64_t lo, unsigned height) {
    if (height == 0) return leaves_[lo];
    auto key = std::make_pair(lo, height);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const std::uint64_t half = std::uint64_t{1} << (height - 1);
    const Hash h = node_hash(root(lo, height - 1), root(lo + half, height - 1));
    memo_.emplace(key, h);
    return h;
  }

  // Peaks of the first m leaves, largest tree first.
  std::vector<Peak> peaks(std::uint64_t m) {
    std::vector<Peak> out;
    std::uint64_t lo = 0;
    for (int h = 63; h >= 0; --h) {
      if (!((m >> h) & 1)) continue;
      out.push_back(Peak{static_cast<unsigned>(h), root(lo, static_cast<unsigned>(h))});
      lo += std::uint64_t{1} << h;
    }
    return out;
  }

  // Sibling path from leaf position p (1-based) up to the root of its peak.
  HashChain path(std::uint64_t p, std::uint64_t m) {
    std::uint64_t lo = 0;
    unsigned peak_h = 0;
    for (int h = 63; h >= 0; --h) {
      if (!((m >> h) & 1)) continue;
      const std::uint64_t span = std::uint64_t{1} << h;
      if (p - 1 < lo + span) {
        peak_h = static_cast<unsigned>(h);
        break;
      }
      lo += span;
    }
    HashChain out;
    const std::uint64_t idx = p - 1;
    for (unsigned level = 0; level < peak_h; ++level) {
      const std::uint64_t node = idx >> level;
      const std::uint64_t sib = node ^ 1;
      out.push_back(ChainLink{(node & 1) ? Side::left : Side::right, root(sib << level, level)});
    }
    return out;
  }

 private:
  const std::vector<Hash>& leaves_;
  std::map<std::pair<std::uint64_t, unsigned>, Hash> memo_;
};

}  // namespace

TEST(MerkleForest, MatchesRecursiveOracleUpTo4096) {
  std::vector<Hash> leaves;
  for (std::uint64_t i = 0; i < 4096; ++i) leaves.push_back(leaf_hash(cmd(1 + i % 7, 1 + i / 7)));
  RecursiveForest oracle(leaves);
  MerkleForest f;
  for (std::uint64_t m = 1; m <= 4096; ++m) {
    f.append(leaves[m - 1]);
    ASSERT_EQ(f.size(), m);
    ASSERT_EQ(f.peaks(), oracle.peaks(m)) << "m=" << m;
  }
}

TEST(MerkleForest, StoredChainsEqualOraclePaths) {
  // three clients committing round-robin; every stored chain must be the
  // exact sibling path from its leaf to the current peak
  ServerCertMeta meta;
  std::vector<Hash> leaves;
  RecursiveForest oracle(leaves);
  for (std::uint64_t i = 0; i < 300; ++i) {
    const Command c = cmd(1 + i % 3, 1 + i / 3);
    leaves.push_back(leaf_hash(c));
    on_commit_update(meta, c);
    ASSERT_TRUE(storage_within_bounds(meta));
    for (const auto& [client, commits] : meta.clients) {
      for (const auto* s : {&commits.previous, &commits.latest}) {
        if (!*s) continue;
        ASSERT_EQ((*s)->chain, oracle.path((*s)->position, meta.forest.size()))
            << "after " << i + 1 << " client " << client << " pos " << (*s)->position;
      }
    }
  }
}

TEST(Certificate, TwoLeafExample) {
  ServerCertMeta meta;
  const Command x1 = cmd(1, 1), x2 = cmd(2, 1);
  on_commit_update(meta, x1);
  on_commit_update(meta, x2);
  ASSERT_EQ(meta.forest.peaks().size(), 1u);
  EXPECT_EQ(meta.forest.peaks()[0].hash, node_hash(leaf_hash(x1), leaf_hash(x2)));
  const Certificate good{x1, 1, {ChainLink{Side::right, leaf_hash(x2)}}};
  EXPECT_EQ(verify_certificate(meta, good), Verdict::accept);
  EXPECT_EQ(verify_certificate(meta, Certificate{x2, 2, {ChainLink{Side::left, leaf_hash(x1)}}}),
            Verdict::accept);
  EXPECT_EQ(verify_certificate(meta, Certificate{x1, 1, {ChainLink{Side::left, leaf_hash(x2)}}}),
            Verdict::side_inconsistent);
  EXPECT_EQ(verify_certificate(meta, Certificate{x1, 1, {ChainLink{Side::right, leaf_hash(x1)}}}),
            Verdict::root_mismatch);
  EXPECT_EQ(verify_certificate(meta, Certificate{cmd(5, 1), 1, {}}), Verdict::unknown_client);
  EXPECT_EQ(verify_certificate(meta, Certificate{x1, 3, {}}), Verdict::side_inconsistent);
  // latest command of a client: no position, no chain
  EXPECT_EQ(verify_certificate(meta, Certificate{x2, std::nullopt, {}}), Verdict::accept);
}

TEST(Certificate, EncodeDecodeRoundTrip) {
  const Certificate c{cmd(3, 9), 17, {ChainLink{Side::left, leaf_hash(cmd(1, 1))},
                                      ChainLink{Side::right, leaf_hash(cmd(2, 2))}}};
  const std::string bytes = encode_certificate(c);
  EXPECT_EQ(bytes.size(), 8u + 8 + 1 + 4 + 4 + 1 + 8 + 4 + 2 * 33);
  EXPECT_EQ(decode_certificate(bytes), c);
  const Certificate latest{cmd(3, 9), std::nullopt, {}};
  EXPECT_EQ(decode_certificate(encode_certificate(latest)), latest);
  EXPECT_FALSE(decode_certificate(bytes + "x"));
  EXPECT_FALSE(decode_certificate(bytes.substr(0, bytes.size() - 1)));
  EXPECT_FALSE(decode_certificate(""));
}

TEST(Certificate, GoldenVectors) {
  std::string detail;
  EXPECT_TRUE(golden_vectors_match(MSMR_GOLDEN_FILE, &detail)) << detail;

  std::ifstream in(MSMR_GOLDEN_FILE);
  const auto g = nlohmann::json::parse(in);
  const auto& c0 = g["commands"][0];
  const Command x{c0["client"].get<std::uint64_t>(), c0["seq"].get<std::uint64_t>(),
                  static_cast<CommandKind>(c0["kind"].get<int>()), c0["payload"].get<std::string>()};
  EXPECT_EQ(to_hex(leaf_hash(x)), g["leaves"][0].get<std::string>());
  const Certificate cert{x, 1, {ChainLink{Side::right, hash_from_hex(g["leaves"][1].get<std::string>())}}};
  const std::string bytes = encode_certificate(cert);
  std::string hex;
  static const char* digits = "0123456789abcdef";
  for (unsigned char ch : bytes) {
    hex.push_back(digits[ch >> 4]);
    hex.push_back(digits[ch & 15]);
  }
  EXPECT_EQ(hex, g["certificate"]["bytes"].get<std::string>());
}

TEST(ClientMerge, SplicedCertificatesVerify) {
  ServerCertMeta meta;
  ClientCertStore store;
  const std::uint64_t me = 2;
  for (std::uint64_t i = 0; i < 90; ++i) {
    const Command c = cmd(1 + i % 3, 1 + i / 3);
    on_commit_update(meta, c);
    if (c.client == me) store.record_ack(c, ack_material(meta, me));
  }
  ASSERT_EQ(store.latest_acked(), 30u);
  for (std::uint64_t seq = 1; seq <= 30; ++seq) {
    const MergeOutcome m = client_merge_chain(store, seq);
    ASSERT_TRUE(m.certificate) << seq;
    EXPECT_FALSE(m.gap) << seq;
    EXPECT_EQ(verify_certificate(meta, *m.certificate), Verdict::accept) << "seq " << seq;
    EXPECT_LE(m.certificate->chain.size(), static_cast<std::size_t>(std::bit_width(meta.forest.size())));
  }
}

TEST(ClientMerge, ReportsGap) {
  ServerCertMeta meta;
  ClientCertStore store;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const Command c = cmd(1 + i % 2, 1 + i / 2);
    on_commit_update(meta, c);
    if (c.client == 1) store.record_ack(c, ack_material(meta, 1));
  }
  store.forget_chain(7);
  const MergeOutcome m = client_merge_chain(store, 3);
  ASSERT_TRUE(m.certificate);
  ASSERT_TRUE(m.gap);
  EXPECT_EQ(*m.gap, 7u);
  const MergeOutcome missing = client_merge_chain(store, 7);
  EXPECT_FALSE(missing.certificate);
  EXPECT_EQ(missing.gap, std::optional<std::uint64_t>(7));
  // whatever the merged chain is, the verdict never accepts a wrong command
  Certificate forged = *m.certificate;
  forged.x.payload += "!";
  EXPECT_NE(verify_certificate(meta, forged), Verdict::accept);
}

TEST(Certificate, MutationsRejected) {
  ServerCertMeta meta;
  ClientCertStore store;
  for (std::uint64_t i = 0; i < 64; ++i) {
    const Command c = cmd(1 + i % 4, 1 + i / 4);
    on_commit_update(meta, c);
    if (c.client == 3) store.record_ack(c, ack_material(meta, 3));
  }
  std::vector<std::string> encoded;
  for (std::uint64_t seq = 1; seq <= store.latest_acked(); ++seq) {
    auto m = client_merge_chain(store, seq);
    ASSERT_TRUE(m.certificate);
    ASSERT_EQ(verify_certificate(meta, *m.certificate), Verdict::accept);
    encoded.push_back(encode_certificate(*m.certificate));
  }
  // every single-bit flip of every certificate is rejected
  std::size_t tried = 0;
  for (const auto& bytes : encoded) {
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      std::string b = bytes;
      b[bit / 8] = static_cast<char>(b[bit / 8] ^ (1u << (bit % 8)));
      auto d = decode_certificate(b);
      ++tried;
      EXPECT_FALSE(d && verify_certificate(meta, *d) == Verdict::accept) << "bit " << bit;
    }
  }
  EXPECT_GT(tried, 1000u);
}

TEST(Storage, BoundsHoldAndDetectOverflow) {
  ServerCertMeta meta;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    on_commit_update(meta, cmd(1 + i % 5, 1 + i / 5));
    ASSERT_EQ(meta.forest.peaks().size(), static_cast<std::size_t>(std::popcount(i + 1)));
  }
  EXPECT_TRUE(storage_within_bounds(meta));
  ServerCertMeta bad = meta;
  bad.clients[1].latest->chain.resize(40);
  EXPECT_FALSE(storage_within_bounds(bad));
}

TEST(AcceptanceHelpers, ForestScratchCheck) {
  std::string detail;
  EXPECT_TRUE(forest_matches_scratch(1024, &detail)) << detail;
}
