#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace carcheck {

/// Shortest representation that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  char buf[17];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, 16);
  std::string s(buf, ptr);
  return std::string(16 - s.size(), '0') + s;
}

}  // namespace carcheck
