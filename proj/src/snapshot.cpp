#include "msmr/snapshot.hpp"

#include <json.hpp>

#include "msmr/rng.hpp"

namespace msmr {

std::uint64_t fingerprint_bytes(const std::string& bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h ^ bytes.size());
}

std::string WorldSnapshot::to_json_line() const {
  nlohmann::json j;
  j["round"] = round.value;
  j["pending_injections"] = pending_injections;
  auto& servers_json = j["servers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < servers.size(); ++i) {
    nlohmann::json s;
    s["id"] = i + 1;
    s["holds_value"] = servers[i].holds_value;
    s["last_useful"] = servers[i].last_useful;
    s["fingerprint"] = servers[i].fingerprint;
    if (i < states.size()) s["state"] = states[i];
    servers_json.push_back(std::move(s));
  }
  return j.dump();
}

}  // namespace msmr
