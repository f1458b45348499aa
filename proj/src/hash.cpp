#include "msmr/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace msmr {

namespace {

Hash digest_parts(std::initializer_list<std::string_view> parts) {
  thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Hash out{};
  unsigned int len = 0;
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init");
  for (auto p : parts) EVP_DigestUpdate(ctx, p.data(), p.size());
  EVP_DigestFinal_ex(ctx, out.data(), &len);
  return out;
}

std::string_view view(const Hash& h) {
  return {reinterpret_cast<const char*>(h.data()), h.size()};
}

}  // namespace

Hash sha256(std::string_view bytes) { return digest_parts({bytes}); }

Hash leaf_hash(const Command& cmd) {
  const std::string enc = encode_command(cmd);
  return digest_parts({std::string_view("\x00", 1), enc});
}

Hash node_hash(const Hash& left, const Hash& right) {
  return digest_parts({std::string_view("\x01", 1), view(left), view(right)});
}

Hash extend_digest(const Hash& digest, const Hash& leaf) {
  return digest_parts({std::string_view("\x02", 1), view(digest), view(leaf)});
}

std::string to_hex(const Hash& h) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : h) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

Hash hash_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw std::invalid_argument("hash hex must have 64 digits");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit");
  };
  Hash h{};
  for (std::size_t i = 0; i < 32; ++i) {
    h[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return h;
}

}  // namespace msmr
