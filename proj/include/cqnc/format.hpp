#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace cqnc {

// Shortest decimal representation that parses back to the identical double.
// All numeric file output goes through here so that write -> read -> write
// is byte-identical.
[[nodiscard]] inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s,
                                         const char* context) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string(context) +
                                ": cannot parse number from '" +
                                std::string(s) + "'");
  return x;
}

// FNV-1a on bytes; used to stamp outputs with a hash of the configuration
// that produced them.
[[nodiscard]] inline std::uint64_t fnv1a_64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

[[nodiscard]] inline std::string hex_string(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

}  // namespace cqnc
