#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/channel.hpp"

namespace tubeharq {

// What the forward link carries: whole packages (committed atomically) or
// individual blocks.
enum class Transport { package, block };

Transport transport_from_string(const std::string& s);
std::string to_string(Transport t);

// Per-session knobs. request_budget counts blocks (budget units) per round;
// the time increment charges c_pkt per budget unit in both transports, so
// equal semantic volume costs equal time. granularity picks what one channel
// erasure draw covers for package transport: each constituent unit, or the
// package as a single channel packet.
struct SessionConfig {
  int rounds = 6;
  int request_budget = 16;
  int compute_budget = 3;
  int u_init = 1;
  double f_init = 0.5;
  double c_init = 0.5;
  double c_rtt = 0.01;
  double c_pkt = 1.024e-4;
  double c_inp = 3.0;
  double tau_trig = 0.35;
  Transport transport = Transport::package;
  ChannelGranularity granularity = ChannelGranularity::package;

  bool operator==(const SessionConfig&) const = default;
};

void validate_config(const SessionConfig& config);

// Delivered-set tracker. Growth is monotone; per-package uncovered counts are
// maintained so policies can score candidates in O(1).
class AvailabilityState {
 public:
  explicit AvailabilityState(const PackageCatalog& catalog);

  bool has(int flat) const { return delivered_[static_cast<std::size_t>(flat)] != 0; }
  int delivered_count() const { return delivered_count_; }
  int missing_count() const;
  const std::vector<std::uint8_t>& delivered() const { return delivered_; }
  std::vector<std::uint8_t> missing_mask() const;

  int package_uncovered(int package_index) const {
    return uncovered_[static_cast<std::size_t>(package_index)];
  }

  // Returns the blocks that became available (empty if already delivered).
  std::vector<int> commit_package(int package_index);
  bool commit_block(int flat);

 private:
  const PackageCatalog* catalog_;
  std::vector<std::uint8_t> delivered_;
  std::vector<int> uncovered_;
  int delivered_count_ = 0;
};

// Initial payload selection: whole packages in catalog order while they fit
// the block target floor(f_init * |U|); a package that does not fit is
// skipped, later smaller ones may still fit. Returns package indices.
std::vector<int> initial_payload(const PackageCatalog& catalog, double f_init);

// u_r = 1 iff the frozen proxy is at or above the threshold and reconstruction
// budget remains.
int decide_trigger(double d_hat_prev, double tau_trig, int compute_left);

struct TraceHeader {
  std::string session_id;
  std::string policy;
  SessionConfig config;

  double per = 0.0;
  double burst_len = 1.0;
  double p01 = 0.0;
  double p10 = 1.0;
  std::uint64_t channel_key = 0;
  std::uint64_t channel_checksum = 0;

  std::uint64_t clip_seed = 0;
  std::uint64_t catalog_hash = 0;
  std::uint64_t distortion_hash = 0;
  int frames = 0;
  int grid_h = 0;
  int grid_w = 0;
  double clip_mu = 0.0;
  std::string stratum;  // "low"/"high" inside sweeps, empty otherwise

  int initial_blocks = 0;
  double t_init = 0.0;
  double d_init = 0.0;
  double d_hat_init = 0.0;
  double proxy_raw_init = 0.0;
  double calib_gain_init = 1.0;
  double calib_offset_init = 0.0;
};

struct RoundRecord {
  int round = 0;
  std::vector<int> requested;           // package ids, or flat block ids
  std::vector<std::uint8_t> erasures;   // one flag per channel unit
  int channel_units = 0;
  int budget_units = 0;                 // sum of c_p (= blocks) this round
  std::vector<int> delivered_packages;  // package ids committed whole
  std::vector<int> committed_blocks;    // flat ids newly available
  int u = 0;
  double delta_t = 0.0;
  double t = 0.0;
  double proxy_raw = 0.0;
  double d_hat = 0.0;
  double d_committed = 0.0;
  double d_instant = 0.0;
  double calib_gain = 1.0;
  double calib_offset = 0.0;
};

struct SessionTrace {
  TraceHeader header;
  std::vector<RoundRecord> rounds;
};

// One JSON object per line: header first, then one line per round. Doubles
// survive the round trip bit-exactly.
std::string trace_to_jsonl(const SessionTrace& trace);
SessionTrace trace_from_jsonl(const std::string& text);
void save_trace(const SessionTrace& trace, const std::string& path);
SessionTrace load_trace(const std::string& path);

// Flat per-round rows for plotting; vector fields are reduced to counts.
std::string trace_to_csv(const SessionTrace& trace);

}  // namespace tubeharq
