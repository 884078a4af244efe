#pragma once

#include <string>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/grid.hpp"
#include "tubeharq/protocol.hpp"
#include "tubeharq/rng.hpp"

namespace tubeharq {

// committed: the trajectory a viewer saw (moves only at reconstruction
// events). instant: the distortion of the current availability state every
// round, evaluated regardless of reconstruction.
enum class TrajectoryMode { committed, instant };
std::string to_string(TrajectoryMode mode);

struct Trajectory {
  std::vector<double> times;   // t_0..t_R
  std::vector<double> levels;  // D_0..D_R
};

Trajectory trajectory(const SessionTrace& trace, TrajectoryMode mode);

struct AoisResult {
  double j = 0.0;
  double horizon = 0.0;
  std::vector<double> segments;  // contribution per segment, initial first
};

// Closed form of the time-weighted area under the piecewise-constant
// distortion trajectory: t0^2/2 * D0 + sum (t_r^2 - t_{r-1}^2)/2 * D_r.
AoisResult aois_auc(const std::vector<double>& times,
                    const std::vector<double>& levels);

// Independent cross-check: composite trapezoid of tau * D(tau) over each
// segment.
double aois_auc_numeric(const std::vector<double>& times,
                        const std::vector<double>& levels, int subdivisions);

struct RecoveryResult {
  double time = 0.0;   // earliest t_r with D_r <= alpha * D_init, else t_R
  int rounds = 0;      // the crossing round; R if never crossed
  bool crossed = false;
  bool degenerate = false;  // D_init == 0: already recovered at t_0
};

RecoveryResult recovery_delay(const std::vector<double>& times,
                              const std::vector<double>& levels, double alpha);

// Mean fraction of grid cells whose binary object occupancy flips between
// consecutive frames.
double motion_score(const ClipMasks& masks);

struct AuditStats {
  bool defined = false;  // false when no package was delivered
  double ratio = 0.0;    // blocks arriving in multi-block packages / all delivered blocks
  double mean_span = 0.0;
  int packages_delivered = 0;
  long long blocks_delivered = 0;
};

AuditStats audit_stats(const SessionTrace& trace, const PackageCatalog& catalog);

enum class SessionMetric {
  j_aois,
  j_aois_instant,
  recovery_time,
  recovery_rounds,
  d_final,
  reconstructions,
};

std::string to_string(SessionMetric metric);

double session_metric(const SessionTrace& trace, SessionMetric metric,
                      double alpha = 0.5);

// Throws pairing_error unless the two traces share clip, channel realization,
// and config apart from the transport primitive.
void assert_paired(const TraceHeader& ours, const TraceHeader& baseline);

// metric(ours) - metric(baseline); negative favors ours.
double paired_gap(const SessionTrace& ours, const SessionTrace& baseline,
                  SessionMetric metric, double alpha = 0.5);

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
};

// Percentile bootstrap of the mean, seeded and deterministic.
MeanCi bootstrap_mean_ci(const std::vector<double>& values, StreamKey key,
                         int resamples = 1000);

// Bitwise check of t_r = t_init + sum of delta increments, folded left to
// right exactly as the session accumulated it.
bool time_identity_holds(const SessionTrace& trace);

}  // namespace tubeharq
