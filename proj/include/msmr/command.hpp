#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "msmr/types.hpp"

namespace msmr {

enum class CommandKind : std::uint8_t {
  normal = 0,
  null = 1,         // placeholder for conflicting commands sharing (client, seq)
  placeholder = 2,  // seed and dummy entries; never executed
};

// Total order: (client, seq, kind, payload).
struct Command {
  std::uint64_t client = 0;
  std::uint64_t seq = 0;
  CommandKind kind = CommandKind::normal;
  std::string payload;

  friend auto operator<=>(const Command&, const Command&) = default;
  friend bool operator==(const Command&, const Command&) = default;

  bool executable() const noexcept { return kind != CommandKind::placeholder; }
  std::string to_string() const;
};

Command seed_command();
Command dummy_command();
Command null_command(std::uint64_t client, std::uint64_t seq);

struct LogEntry {
  Command cmd;
  RoundIndex birth{0};

  friend auto operator<=>(const LogEntry&, const LogEntry&) = default;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

using Log = std::vector<LogEntry>;
using LogPtr = std::shared_ptr<const Log>;  // nullptr is bottom

// Lexicographic on the command sequence (a strict prefix precedes its
// extension); equal command sequences are ordered by birth rounds.
std::strong_ordering lex_compare(const Log& a, const Log& b);

bool contains_command(const Log& log, const Command& cmd);
// Index of cmd in log, or log.size().
std::size_t find_command(const Log& log, const Command& cmd);

// Byte encoding of a command: u64 client, u64 seq, u8 kind, u32 length,
// payload bytes; integers little-endian.
std::string encode_command(const Command& cmd);

std::string serialize_log(const LogPtr& log);

// Order-sensitive 64-bit hash used by audits for prefix identity.
std::uint64_t entry_hash(const LogEntry& e) noexcept;
std::uint64_t chain_hash(std::uint64_t prev, const LogEntry& e) noexcept;

}  // namespace msmr
