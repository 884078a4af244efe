#include "tubeharq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tubeharq/util.hpp"

namespace tubeharq {

std::string to_string(TrajectoryMode mode) {
  return mode == TrajectoryMode::committed ? "committed" : "instant";
}

Trajectory trajectory(const SessionTrace& trace, TrajectoryMode mode) {
  Trajectory out;
  out.times.reserve(trace.rounds.size() + 1);
  out.levels.reserve(trace.rounds.size() + 1);
  out.times.push_back(trace.header.t_init);
  out.levels.push_back(trace.header.d_init);
  for (const RoundRecord& r : trace.rounds) {
    out.times.push_back(r.t);
    out.levels.push_back(mode == TrajectoryMode::committed ? r.d_committed
                                                           : r.d_instant);
  }
  return out;
}

AoisResult aois_auc(const std::vector<double>& times,
                    const std::vector<double>& levels) {
  if (times.empty() || times.size() != levels.size()) {
    throw std::invalid_argument("aois_auc: times and levels must be equal-length and nonempty");
  }
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev)) {
      throw std::invalid_argument("aois_auc: times must be nondecreasing and nonnegative");
    }
    prev = t;
  }
  AoisResult out;
  out.segments.reserve(times.size());
  double seg = times[0] * times[0] / 2.0 * levels[0];
  out.segments.push_back(seg);
  out.j = seg;
  for (std::size_t r = 1; r < times.size(); ++r) {
    seg = (times[r] * times[r] - times[r - 1] * times[r - 1]) / 2.0 * levels[r];
    out.segments.push_back(seg);
    out.j += seg;
  }
  out.horizon = times.back();
  return out;
}

double aois_auc_numeric(const std::vector<double>& times,
                        const std::vector<double>& levels, int subdivisions) {
  if (times.empty() || times.size() != levels.size()) {
    throw std::invalid_argument("aois_auc_numeric: times and levels must be equal-length and nonempty");
  }
  if (subdivisions < 1) {
    throw std::invalid_argument("aois_auc_numeric: subdivisions must be positive");
  }
  double total = 0.0;
  double a = 0.0;
  for (std::size_t r = 0; r < times.size(); ++r) {
    const double b = times[r];
    const double level = levels[r];
    const double h = (b - a) / subdivisions;
    double sum = (a * level + b * level) / 2.0;
    for (int i = 1; i < subdivisions; ++i) {
      sum += (a + h * i) * level;
    }
    total += h * sum;
    a = b;
  }
  return total;
}

RecoveryResult recovery_delay(const std::vector<double>& times,
                              const std::vector<double>& levels, double alpha) {
  if (times.empty() || times.size() != levels.size()) {
    throw std::invalid_argument("recovery_delay: times and levels must be equal-length and nonempty");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("recovery_delay: alpha must lie in (0, 1)");
  }
  RecoveryResult out;
  const double init = levels[0];
  if (init == 0.0) {
    out.time = times[0];
    out.rounds = 0;
    out.crossed = true;
    out.degenerate = true;
    return out;
  }
  const double target = alpha * init;
  for (std::size_t r = 1; r < levels.size(); ++r) {
    if (levels[r] <= target) {
      out.time = times[r];
      out.rounds = static_cast<int>(r);
      out.crossed = true;
      return out;
    }
  }
  out.time = times.back();
  out.rounds = static_cast<int>(levels.size()) - 1;
  out.crossed = false;
  return out;
}

double motion_score(const ClipMasks& masks) {
  const Universe& u = masks.universe;
  if (u.frames < 2) {
    throw std::invalid_argument("motion_score: need at least two frames");
  }
  const int n = u.blocks_per_frame();
  long long changed = 0;
  for (int t = 2; t <= u.frames; ++t) {
    for (int b = 1; b <= n; ++b) {
      const bool now = masks.id_at(t, b) > 0;
      const bool before = masks.id_at(t - 1, b) > 0;
      changed += (now != before) ? 1 : 0;
    }
  }
  return static_cast<double>(changed) /
         (static_cast<double>(u.frames - 1) * static_cast<double>(n));
}

AuditStats audit_stats(const SessionTrace& trace, const PackageCatalog& catalog) {
  if (trace.header.config.transport != Transport::package) {
    throw std::invalid_argument("audit_stats: trace must come from package transport");
  }
  AuditStats out;
  long long multi = 0;
  long long span_sum = 0;
  for (const RoundRecord& r : trace.rounds) {
    for (int pid : r.delivered_packages) {
      const Package& p = catalog.package_by_id(pid);
      out.packages_delivered += 1;
      out.blocks_delivered += p.size;
      span_sum += p.span;
      if (p.size > 1) multi += p.size;
    }
  }
  if (out.packages_delivered == 0) return out;
  out.defined = true;
  out.ratio = static_cast<double>(multi) / static_cast<double>(out.blocks_delivered);
  out.mean_span = static_cast<double>(span_sum) /
                  static_cast<double>(out.packages_delivered);
  return out;
}

std::string to_string(SessionMetric metric) {
  switch (metric) {
    case SessionMetric::j_aois: return "j_aois";
    case SessionMetric::j_aois_instant: return "j_aois_instant";
    case SessionMetric::recovery_time: return "recovery_time";
    case SessionMetric::recovery_rounds: return "recovery_rounds";
    case SessionMetric::d_final: return "d_final";
    case SessionMetric::reconstructions: return "reconstructions";
  }
  throw std::invalid_argument("unknown session metric");
}

double session_metric(const SessionTrace& trace, SessionMetric metric,
                      double alpha) {
  switch (metric) {
    case SessionMetric::j_aois: {
      const Trajectory tr = trajectory(trace, TrajectoryMode::committed);
      return aois_auc(tr.times, tr.levels).j;
    }
    case SessionMetric::j_aois_instant: {
      const Trajectory tr = trajectory(trace, TrajectoryMode::instant);
      return aois_auc(tr.times, tr.levels).j;
    }
    case SessionMetric::recovery_time: {
      const Trajectory tr = trajectory(trace, TrajectoryMode::committed);
      return recovery_delay(tr.times, tr.levels, alpha).time;
    }
    case SessionMetric::recovery_rounds: {
      const Trajectory tr = trajectory(trace, TrajectoryMode::committed);
      return recovery_delay(tr.times, tr.levels, alpha).rounds;
    }
    case SessionMetric::d_final: {
      if (trace.rounds.empty()) return trace.header.d_init;
      return trace.rounds.back().d_committed;
    }
    case SessionMetric::reconstructions: {
      long long u = trace.header.config.u_init;
      for (const RoundRecord& r : trace.rounds) u += r.u;
      return static_cast<double>(u);
    }
  }
  throw std::invalid_argument("unknown session metric");
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw pairing_error(std::string("paired traces disagree on ") + what);
}

}  // namespace

void assert_paired(const TraceHeader& ours, const TraceHeader& baseline) {
  require(ours.clip_seed == baseline.clip_seed, "clip seed");
  require(ours.catalog_hash == baseline.catalog_hash, "catalog hash");
  require(ours.distortion_hash == baseline.distortion_hash, "distortion hash");
  require(ours.channel_key == baseline.channel_key, "channel key");
  require(ours.channel_checksum == baseline.channel_checksum, "channel realization");
  require(ours.per == baseline.per, "erasure rate");
  require(ours.burst_len == baseline.burst_len, "burst length");
  require(ours.p01 == baseline.p01 && ours.p10 == baseline.p10,
          "channel transition rates");
  require(ours.frames == baseline.frames && ours.grid_h == baseline.grid_h &&
              ours.grid_w == baseline.grid_w,
          "clip geometry");
  SessionConfig a = ours.config;
  SessionConfig b = baseline.config;
  a.transport = b.transport;  // the primitive is the one licensed difference
  require(a == b, "session config");
}

double paired_gap(const SessionTrace& ours, const SessionTrace& baseline,
                  SessionMetric metric, double alpha) {
  assert_paired(ours.header, baseline.header);
  return session_metric(ours, metric, alpha) -
         session_metric(baseline, metric, alpha);
}

MeanCi bootstrap_mean_ci(const std::vector<double>& values, StreamKey key,
                         int resamples) {
  MeanCi out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) return out;
  if (resamples < 1) {
    throw std::invalid_argument("bootstrap_mean_ci: resamples must be positive");
  }
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(n);

  CounterRng rng(key);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += values[rng.next_below(n)];
    }
    means.push_back(s / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  const auto pick = [&](double q) {
    std::size_t idx = static_cast<std::size_t>(q * resamples);
    if (idx >= means.size()) idx = means.size() - 1;
    return means[idx];
  };
  out.lo = pick(0.025);
  out.hi = pick(0.975);
  return out;
}

bool time_identity_holds(const SessionTrace& trace) {
  double t = trace.header.t_init;
  for (const RoundRecord& r : trace.rounds) {
    t = t + r.delta_t;
    if (t != r.t) return false;
  }
  return true;
}

}  // namespace tubeharq
