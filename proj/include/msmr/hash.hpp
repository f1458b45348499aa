#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "msmr/command.hpp"

namespace msmr {

using Hash = std::array<std::uint8_t, 32>;

Hash sha256(std::string_view bytes);

// Domain separated: leaf = H(0x00 || encode(cmd)), node = H(0x01 || left || right).
Hash leaf_hash(const Command& cmd);
Hash node_hash(const Hash& left, const Hash& right);
// Cumulative digest of a committed sequence: d' = H(0x02 || d || leaf).
Hash extend_digest(const Hash& digest, const Hash& leaf);

std::string to_hex(const Hash& h);
Hash hash_from_hex(const std::string& hex);

}  // namespace msmr
