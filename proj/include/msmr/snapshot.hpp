#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msmr/types.hpp"

namespace msmr {

struct ServerView {
  bool holds_value = false;       // non-bottom at the start of the round
  std::uint64_t last_useful = 0;  // last earlier round the server was useful, 0 = never
  std::uint64_t fingerprint = 0;  // digest of the serialized state (archive mode only)
};

// State of the world at the start of a round, as the adversary may see it.
struct WorldSnapshot {
  RoundIndex round{1};
  std::vector<ServerView> servers;
  std::size_t pending_injections = 0;
  std::vector<std::string> states;  // serialized server states (archive mode only)

  std::string to_json_line() const;
};

std::uint64_t fingerprint_bytes(const std::string& bytes) noexcept;

}  // namespace msmr
