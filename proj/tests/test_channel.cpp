#include "doctest.h"

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tubeharq/channel.hpp"
#include "tubeharq/rng.hpp"

using namespace tubeharq;

TEST_CASE("parameter matching hits target rates exactly") {
  const GEParams p = match_ge_params(0.2, 4.0);
  CHECK(p.p10 == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.p01 == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(p.stationary_per() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("zero loss degenerates to the good state") {
  const GEParams p = match_ge_params(0.0, 4.0);
  CHECK(p.p01 == 0.0);
  CHECK(p.stationary_per() == 0.0);
  ChannelState ch(p, StreamKey{9});
  const auto flags = ch.transmit(4096);
  for (std::uint8_t f : flags) CHECK(f == 0);
}

TEST_CASE("clamped regime keeps the stationary rate") {
  const GEParams p = match_ge_params(0.9, 2.0);
  CHECK(p.p01 == 1.0);
  CHECK(p.p10 == doctest::Approx(0.1 / 0.9).epsilon(1e-12));
  CHECK(p.stationary_per() == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("parameter matching rejects out-of-range inputs") {
  CHECK_THROWS_AS(match_ge_params(1.0, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(match_ge_params(-0.1, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(match_ge_params(0.2, 0.5), std::invalid_argument);
}

TEST_CASE("stationary examples") {
  CHECK(match_ge_params(0.5, 3.0).stationary_per() ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(GEParams{}.stationary_per() == 0.0);
}

TEST_CASE("realizations are deterministic per key") {
  const GEParams p = match_ge_params(0.3, 4.0);
  ChannelState a(p, StreamKey{42});
  ChannelState b(p, StreamKey{42});
  CHECK(a.transmit(512) == b.transmit(512));
  ChannelState c(p, StreamKey{43});
  CHECK(a.transmit(512) != c.transmit(1024));
}

TEST_CASE("splitting a transmission does not change the realization") {
  const GEParams p = match_ge_params(0.25, 4.0);
  ChannelState whole(p, StreamKey{7});
  const auto full = whole.transmit(16);

  ChannelState split(p, StreamKey{7});
  auto first = split.transmit(5);
  const auto second = split.transmit(11);
  first.insert(first.end(), second.begin(), second.end());
  CHECK(first == full);
  CHECK(split.units_consumed() == 16);
  CHECK(whole.units_consumed() == 16);
}

TEST_CASE("empirical loss rate and burst length match the chain") {
  const GEParams p = match_ge_params(0.2, 4.0);
  ChannelState ch(p, StreamKey{2718});
  const int units = 200000;
  const auto flags = ch.transmit(units);
  long erased = 0;
  long bursts = 0;
  long burst_units = 0;
  bool in_burst = false;
  for (std::uint8_t f : flags) {
    if (f) {
      erased += 1;
      burst_units += 1;
      if (!in_burst) bursts += 1;
      in_burst = true;
    } else {
      in_burst = false;
    }
  }
  const double emp_per = static_cast<double>(erased) / units;
  CHECK(emp_per == doctest::Approx(0.2).epsilon(0.05));
  const double mean_burst = static_cast<double>(burst_units) / bursts;
  CHECK(mean_burst == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("realization checksum replays from the start") {
  const GEParams p = match_ge_params(0.15, 4.0);
  const std::uint64_t before = realization_checksum(p, StreamKey{11});
  ChannelState ch(p, StreamKey{11});
  ch.transmit(300);  // consuming units must not affect the checksum
  CHECK(realization_checksum(p, StreamKey{11}) == before);
  CHECK(realization_checksum(p, StreamKey{12}) != before);
  CHECK(realization_checksum(p, StreamKey{11}, 512) != before);
}

TEST_CASE("transmit rejects negative unit counts") {
  const GEParams p = match_ge_params(0.1, 4.0);
  ChannelState ch(p, StreamKey{1});
  CHECK_THROWS_AS(ch.transmit(-1), std::invalid_argument);
  CHECK(ch.transmit(0).empty());
}

TEST_CASE("erasure trace renders one row per event") {
  std::vector<ErasureEvent> events;
  events.push_back(ErasureEvent{0, 1, 1, 1});
  events.push_back(ErasureEvent{1, 1, 0, 0});
  const std::string csv = erasure_trace_csv(events);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) rows += 1;
  CHECK(rows == 3);  // header + 2 events
  CHECK(csv.find("unit_index") != std::string::npos);
}
