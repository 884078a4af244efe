#pragma once

#include <cstdint>
#include <string_view>

#include "tubeharq/util.hpp"

namespace tubeharq {

// splitmix64 finalizer. Counter-based: draw i of a stream is a pure function
// of (key, i), so a stream can be replayed or probed without disturbing it.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream identity. Derivation chains are order-sensitive: derive(k, a, b) and
// derive(k, b, a) name different streams.
struct StreamKey {
  std::uint64_t v = 0;
};

inline StreamKey derive(StreamKey k, std::uint64_t salt) {
  return {mix64(k.v ^ mix64(salt + 0x632be59bd9b4e019ull))};
}

inline StreamKey derive(StreamKey k, std::string_view component) {
  return derive(k, fnv1a(component));
}

template <typename... Rest>
StreamKey derive(StreamKey k, std::uint64_t salt, Rest... rest) {
  return derive(derive(k, salt), rest...);
}

template <typename... Rest>
StreamKey derive(StreamKey k, std::string_view component, Rest... rest) {
  return derive(derive(k, component), rest...);
}

// Deterministic counter-based generator. Consuming n draws then m draws
// yields the same sequence as consuming n+m in one call (chronological
// coupling); at(i) peeks without consuming.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(StreamKey key) : key_(key) {}

  std::uint64_t at(std::uint64_t i) const {
    return mix64(key_.v + i * 0x9e3779b97f4a7c15ull);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform in [0, 1), 53-bit mantissa.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double unit_at(std::uint64_t i) const {
    return static_cast<double>(at(i) >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Multiply-shift keeps it branch-free and deterministic.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t counter() const { return counter_; }
  StreamKey key() const { return key_; }

 private:
  StreamKey key_{};
  std::uint64_t counter_ = 0;
};

}  // namespace tubeharq
