#include "msmr/medianrules.hpp"

namespace msmr {

namespace {

// Draws an l-subset of `replies` into `out` (l small, so a fixed buffer).
void draw(std::span<const Key> replies, std::size_t l, RngStream& rng, std::vector<Key>& out) {
  thread_local std::vector<std::size_t> idx;
  choose_subset(rng, replies.size(), l, idx);
  out.clear();
  for (std::size_t i : idx) out.push_back(replies[i]);
}

}  // namespace

void RuleParams::validate() const {
  if (l == 0 || l % 2 == 0) throw ConfigError("l must be odd and positive");
  if (k < l) throw ConfigError("k must be at least l");
}

Key median_of(std::span<const Key> values) {
  std::vector<Key> v(values.begin(), values.end());
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

Value median_step(const Value& own, std::span<const Key> replies, const RuleParams& params,
                  RngStream& rng) {
  (void)own;
  if (replies.size() < params.l) return std::nullopt;
  thread_local std::vector<Key> chosen;
  draw(replies, params.l, rng, chosen);
  auto mid = chosen.begin() + static_cast<std::ptrdiff_t>(chosen.size() / 2);
  std::nth_element(chosen.begin(), mid, chosen.end());
  return *mid;
}

GossipState gossip_step(const GossipState& own, std::span<const GossipValue> replies,
                        const RuleParams& params) {
  (void)own;
  if (replies.size() < params.l) return std::nullopt;
  for (GossipValue v : replies) {
    if (v == GossipValue::broadcast) return GossipValue::broadcast;
  }
  return GossipValue::dummy;
}

Value priority_step(const Value& own, std::span<const Key> replies, const RuleParams& params,
                    RngStream& rng) {
  (void)own;
  if (replies.size() < params.l) return std::nullopt;
  thread_local std::vector<Key> chosen;
  draw(replies, params.l, rng, chosen);
  return *std::max_element(chosen.begin(), chosen.end());
}

}  // namespace msmr
