#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubeharq/rng.hpp"

namespace tubeharq {

// Two-state Markov erasure chain over channel units. The erasure indicator
// equals the state: bad erases deterministically. p01 = P(bad | prev good),
// p10 = P(good | prev bad).
struct GEParams {
  double target_per = 0.0;
  double burst_len = 1.0;
  double p01 = 0.0;
  double p10 = 1.0;

  double stationary_per() const {
    const double s = p01 + p10;
    return s == 0.0 ? 0.0 : p01 / s;
  }
};

// PER/burst matching: p10 = 1/L and p01 = PER/(1-PER) * p10. When that p01
// reaches 1 it is clamped and p10 is lowered to (1-PER)/PER instead, which
// keeps the stationary loss rate at PER with a longer effective burst.
GEParams match_ge_params(double target_per, double burst_len);

enum class ChannelGranularity { unit, package };

ChannelGranularity granularity_from_string(const std::string& s);
std::string to_string(ChannelGranularity g);

class ChannelState {
 public:
  // Initial state is a stationary draw (stream counter 0); unit transitions
  // consume one draw each, so realizations are prefix-stable across callers
  // that consume different unit counts.
  ChannelState(const GEParams& params, StreamKey key);

  // One Markov step per unit; returns erasure flags (1 = erased).
  std::vector<std::uint8_t> transmit(int units);

  bool bad() const { return bad_; }
  std::uint64_t units_consumed() const { return units_; }
  const GEParams& params() const { return params_; }
  StreamKey stream_key() const { return key_; }

 private:
  GEParams params_;
  StreamKey key_;
  CounterRng rng_;
  bool bad_ = false;
  std::uint64_t units_ = 0;
};

// Checksum of the realization itself (first `units` erasure indicators replayed
// from a fresh state), not of any consumed prefix: two sessions share it iff
// they would see identical erasures unit for unit.
std::uint64_t realization_checksum(const GEParams& params, StreamKey key,
                                   int units = 1024);

struct ErasureEvent {
  std::uint64_t unit_index;
  int round;
  int state;  // 1 = bad
  int erased;
};

std::string erasure_trace_csv(const std::vector<ErasureEvent>& events);

}  // namespace tubeharq
