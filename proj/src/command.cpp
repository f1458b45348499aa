#include "msmr/command.hpp"

#include <algorithm>

#include "msmr/rng.hpp"
#include "msmr/snapshot.hpp"

namespace msmr {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

Command seed_command() { return Command{0, 0, CommandKind::placeholder, "x0"}; }
Command dummy_command() { return Command{0, 0, CommandKind::placeholder, "xd"}; }
Command null_command(std::uint64_t client, std::uint64_t seq) {
  return Command{client, seq, CommandKind::null, ""};
}

std::string Command::to_string() const {
  std::string s = "(" + std::to_string(client) + "," + std::to_string(seq);
  if (kind == CommandKind::null) return s + ",null)";
  if (kind == CommandKind::placeholder) return s + ",#" + payload + ")";
  return s + "," + payload + ")";
}

std::strong_ordering lex_compare(const Log& a, const Log& b) {
  const auto by_cmd = std::lexicographical_compare_three_way(
      a.begin(), a.end(), b.begin(), b.end(),
      [](const LogEntry& x, const LogEntry& y) { return x.cmd <=> y.cmd; });
  if (by_cmd != 0) return by_cmd;
  // same commands: birth rounds break the tie
  return std::lexicographical_compare_three_way(
      a.begin(), a.end(), b.begin(), b.end(),
      [](const LogEntry& x, const LogEntry& y) { return x.birth <=> y.birth; });
}

std::size_t find_command(const Log& log, const Command& cmd) {
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].cmd == cmd) return i;
  }
  return log.size();
}

bool contains_command(const Log& log, const Command& cmd) {
  return find_command(log, cmd) != log.size();
}

std::string encode_command(const Command& cmd) {
  std::string out;
  out.reserve(21 + cmd.payload.size());
  put_le(out, cmd.client, 8);
  put_le(out, cmd.seq, 8);
  out.push_back(static_cast<char>(cmd.kind));
  put_le(out, cmd.payload.size(), 4);
  out += cmd.payload;
  return out;
}

std::string serialize_log(const LogPtr& log) {
  if (!log) return "_";
  std::string s = "[";
  for (const auto& e : *log) {
    s += e.cmd.to_string();
    s += "@" + std::to_string(e.birth.value) + ";";
  }
  return s + "]";
}

std::uint64_t entry_hash(const LogEntry& e) noexcept {
  std::uint64_t h = mix64(e.cmd.client * 0x9E3779B97F4A7C15ULL ^ e.cmd.seq);
  h = mix64(h ^ (static_cast<std::uint64_t>(e.cmd.kind) << 40) ^ e.birth.value);
  return mix64(h ^ fingerprint_bytes(e.cmd.payload));
}

std::uint64_t chain_hash(std::uint64_t prev, const LogEntry& e) noexcept {
  return mix64(prev * 0xD1B54A32D192ED03ULL + entry_hash(e));
}

}  // namespace msmr
