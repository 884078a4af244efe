#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tubeharq {

// Budget/accounting violations inside a running session.
struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two traces offered as a pair but not channel-comparable.
struct pairing_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad sweep/session configuration (unknown field, out-of-range value).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a(s.data(), s.size(), h);
}

// Shortest round-trip decimal form; used everywhere a double is printed so
// rerun outputs are byte-identical.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("fmt_double: to_chars failed");
  return std::string(buf, ptr);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace tubeharq
