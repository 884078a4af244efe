#include "tubeharq/channel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tubeharq/util.hpp"

namespace tubeharq {

GEParams match_ge_params(double target_per, double burst_len) {
  if (!(target_per >= 0.0 && target_per < 1.0))
    throw std::invalid_argument("channel: target PER must be in [0, 1)");
  if (!(burst_len >= 1.0))
    throw std::invalid_argument("channel: burst length must be >= 1");

  GEParams p;
  p.target_per = target_per;
  p.burst_len = burst_len;
  p.p10 = 1.0 / burst_len;
  p.p01 = target_per == 0.0
              ? 0.0
              : target_per / (1.0 - target_per) * p.p10;
  if (p.p01 >= 1.0) {
    p.p01 = 1.0;
    p.p10 = (1.0 - target_per) / target_per;
  }
  return p;
}

ChannelGranularity granularity_from_string(const std::string& s) {
  if (s == "unit") return ChannelGranularity::unit;
  if (s == "package") return ChannelGranularity::package;
  throw std::invalid_argument("channel: unknown granularity '" + s + "'");
}

std::string to_string(ChannelGranularity g) {
  return g == ChannelGranularity::unit ? "unit" : "package";
}

ChannelState::ChannelState(const GEParams& params, StreamKey key)
    : params_(params), key_(key), rng_(key) {
  bad_ = rng_.next_unit() < params_.stationary_per();
}

std::vector<std::uint8_t> ChannelState::transmit(int units) {
  if (units < 0) throw std::invalid_argument("channel: negative unit count");
  std::vector<std::uint8_t> erased(static_cast<std::size_t>(units));
  for (int i = 0; i < units; ++i) {
    const double u = rng_.next_unit();
    bad_ = bad_ ? !(u < params_.p10) : (u < params_.p01);
    erased[static_cast<std::size_t>(i)] = bad_ ? 1 : 0;
  }
  units_ += static_cast<std::uint64_t>(units);
  return erased;
}

std::uint64_t realization_checksum(const GEParams& params, StreamKey key,
                                   int units) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a(&params.p01, sizeof(double), h);
  h = fnv1a(&params.p10, sizeof(double), h);
  h = fnv1a(&key.v, sizeof key.v, h);
  ChannelState replay(params, key);
  const auto erased = replay.transmit(units);
  h = fnv1a(erased.data(), erased.size(), h);
  return h;
}

std::string erasure_trace_csv(const std::vector<ErasureEvent>& events) {
  std::ostringstream out;
  out << "unit_index,round,state,erased\n";
  for (const auto& e : events)
    out << e.unit_index << ',' << e.round << ',' << e.state << ',' << e.erased
        << '\n';
  return out.str();
}

}  // namespace tubeharq
