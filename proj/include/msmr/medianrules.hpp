#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msmr/rng.hpp"
#include "msmr/types.hpp"

namespace msmr {

using Key = std::uint64_t;
using Value = std::optional<Key>;  // nullopt is bottom

struct RuleParams {
  std::size_t k = 6;
  std::size_t l = 3;

  // k >= l >= 1 and l odd.
  void validate() const;
};

// Median rule: fewer than l replies gives bottom, otherwise the median of
// a uniformly chosen l-subset of the replies.
Value median_step(const Value& own, std::span<const Key> replies, const RuleParams& params,
                  RngStream& rng);

// The (k, l, f) rule with selector f applied to a uniformly chosen
// l-subset. f must return one of its arguments; otherwise the trial aborts
// with ProtocolViolation.
template <class Selector>
Value klf_step(const Value& own, std::span<const Key> replies, const RuleParams& params,
               Selector&& f, RngStream& rng) {
  (void)own;
  if (replies.size() < params.l) return std::nullopt;
  std::vector<std::size_t> idx;
  choose_subset(rng, replies.size(), params.l, idx);
  std::vector<Key> chosen;
  chosen.reserve(idx.size());
  for (std::size_t i : idx) chosen.push_back(replies[i]);
  const Key out = f(std::span<const Key>(chosen));
  if (std::find(chosen.begin(), chosen.end(), out) == chosen.end()) {
    throw ProtocolViolation("selector returned a value that is not one of its arguments");
  }
  return out;
}

enum class GossipValue : std::uint8_t { dummy = 0, broadcast = 1 };
using GossipState = std::optional<GossipValue>;

// Gossip rule over all replies: at least l replies and one of them holds
// the broadcast value gives that value, at least l replies otherwise give
// the dummy, fewer give bottom.
GossipState gossip_step(const GossipState& own, std::span<const GossipValue> replies,
                        const RuleParams& params);

// Priority rule: maximum of a uniformly chosen l-subset.
Value priority_step(const Value& own, std::span<const Key> replies, const RuleParams& params,
                    RngStream& rng);

// Median of an odd-sized list.
Key median_of(std::span<const Key> values);

}  // namespace msmr
