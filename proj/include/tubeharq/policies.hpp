#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/protocol.hpp"
#include "tubeharq/rng.hpp"

namespace tubeharq {

struct ScoreWeights {
  double w_rho = 1.0;
  double w_area = 0.5;
  double w_span = 0.25;

  bool operator==(const ScoreWeights&) const = default;
};

struct PackageScore {
  int package_id = 0;
  int size = 0;      // c_p, the budget cost of requesting the package
  double rho = 0.0;  // uncovered fraction, in (0, 1] for candidates
  double area = 0.0; // owner tube mean support area
  int span = 0;
  double score = 0.0;
};

enum class PolicyKind {
  tube_package,
  greedy_block,
  greedy_block_random,
  tube_weighted_block,
  hysteresis,
  offline_plan,
};

PolicyKind policy_from_string(const std::string& s);
std::string to_string(PolicyKind kind);
Transport transport_of(PolicyKind kind);

struct PolicySpec {
  PolicyKind kind = PolicyKind::tube_package;
  ScoreWeights weights{};
  double tau_hi = 0.45;  // hysteresis only
  double tau_lo = 0.25;
};

// One score per package with uncovered blocks; fully delivered packages are
// not candidates.
std::vector<PackageScore> score_packages(const PackageCatalog& catalog,
                                         const AvailabilityState& avail,
                                         const ScoreWeights& weights);

// Greedy scan in descending score (ties: ascending id); a package is taken iff
// its full size still fits the budget, and the scan continues past misfits.
// Returns package ids.
std::vector<int> select_request_tube_package(const std::vector<PackageScore>& scores,
                                             int budget);

// Missing blocks ranked by owner-tube mean support area (descending), then
// flat order; top `budget` blocks. Returns flat block ids.
std::vector<int> select_request_greedy_block(const PackageCatalog& catalog,
                                             const AvailabilityState& avail,
                                             int budget);

// Sensitivity variant: uniform seeded shuffle instead of the area ranking.
std::vector<int> select_request_greedy_block_random(const PackageCatalog& catalog,
                                                    const AvailabilityState& avail,
                                                    int budget, CounterRng& rng);

// Block-native transport with package-aware ranking: each missing block
// inherits its package's current score; ties fall back to the greedy-block
// order.
std::vector<int> select_request_tube_weighted_block(const PackageCatalog& catalog,
                                                    const AvailabilityState& avail,
                                                    const ScoreWeights& weights,
                                                    int budget);

// On at tau_hi, off below tau_lo; in between the previous state holds.
class HysteresisLatch {
 public:
  HysteresisLatch(double tau_hi, double tau_lo);

  bool update(double d_hat);
  bool on() const { return on_; }

 private:
  double tau_hi_;
  double tau_lo_;
  bool on_ = false;
};

// Scheduling surrogate: the AoIS area of the raw proxy trajectory on a time
// axis that charges transmission but not reconstruction compute. Times are
// then schedule-independent, so adding a reconstruction round never increases
// the value (the raw proxy is nonincreasing over rounds), which makes the
// exact-size enumeration below an argmin over all schedules of that size or
// smaller.
//
// raws holds raw_0..raw_R (post-commit missing-state proxy per round),
// budget_units the per-round block counts, schedule u_1..u_R.
double surrogate_auc(const std::vector<double>& raws,
                     const std::vector<int>& budget_units,
                     const std::vector<std::uint8_t>& schedule,
                     const SessionConfig& config);

struct OfflinePlan {
  std::vector<std::uint8_t> schedule;  // u_1..u_R
  double surrogate = 0.0;
  int evaluated = 0;  // schedules enumerated
};

// Exhaustive search over all placements of exactly
// min(max(compute_budget - u_init, 0), R) reconstructions; the first minimum
// in lexicographic enumeration order wins.
OfflinePlan plan_offline(const std::vector<double>& raws,
                         const std::vector<int>& budget_units,
                         const SessionConfig& config);

}  // namespace tubeharq
