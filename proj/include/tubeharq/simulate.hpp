#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubeharq/channel.hpp"
#include "tubeharq/distortion.hpp"
#include "tubeharq/policies.hpp"
#include "tubeharq/protocol.hpp"

namespace tubeharq {

struct SessionSetup {
  const PackageCatalog* catalog = nullptr;
  const DistortionModel* distortion = nullptr;
  SessionConfig config{};
  PolicySpec policy{};
  double proxy_decay = 0.7;
  GEParams channel{};
  StreamKey channel_key{};
  StreamKey policy_key{};  // consumed only by the randomized block ranking
  std::string session_id;
  std::uint64_t clip_seed = 0;
  double clip_mu = 0.0;
  std::string stratum;
};

struct DeliveryOutcome {
  std::vector<int> delivered_packages;  // package ids committed whole
  std::vector<int> committed_blocks;    // flat ids newly available
  std::vector<std::uint8_t> erasures;   // one per channel unit
  int channel_units = 0;
  int budget_units = 0;
};

// Sends one request over the channel and commits deliveries. Package requests
// commit atomically: a package whose channel units are not all clean commits
// nothing. Throws protocol_error if the request exceeds the budget and
// invalid_argument on unknown ids.
DeliveryOutcome transmit_request(const PackageCatalog& catalog,
                                 AvailabilityState& avail, ChannelState& channel,
                                 const std::vector<int>& request,
                                 Transport transport,
                                 ChannelGranularity granularity, int budget);

// Runs a full fixed-horizon session: initial payload, R request rounds,
// trigger decisions, proxy calibration at reconstruction events, and time
// accounting. The committed distortion trajectory only moves at
// reconstruction events; the instantaneous one is evaluated every round.
SessionTrace run_session(const SessionSetup& setup);

}  // namespace tubeharq
