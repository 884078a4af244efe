#include "tubeharq/sweep.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "tubeharq/metrics.hpp"
#include "tubeharq/simulate.hpp"
#include "tubeharq/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tubeharq {

using nlohmann::json;

TraceMode trace_mode_from_string(const std::string& s) {
  if (s == "summary") return TraceMode::summary;
  if (s == "full") return TraceMode::full;
  throw config_error("unknown trace mode: " + s);
}

std::string to_string(TraceMode mode) {
  return mode == TraceMode::summary ? "summary" : "full";
}

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
  throw config_error("config field '" + path + "': " + why);
}

double num_field(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  return v.get<double>();
}

int int_field(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad_field(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t u64_field(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    bad_field(path, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string str_field(const json& v, const std::string& path) {
  if (!v.is_string()) bad_field(path, "expected a string");
  return v.get<std::string>();
}

}  // namespace

SweepConfig sweep_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("sweep config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("sweep config must be a JSON object");

  SweepConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "base_seed") {
      c.base_seed = u64_field(v, key);
    } else if (key == "per") {
      if (!v.is_array()) bad_field(key, "expected an array of numbers");
      c.per.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.per.push_back(num_field(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "k") {
      if (!v.is_array()) bad_field(key, "expected an array of integers");
      c.k.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.k.push_back(int_field(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "bc") {
      if (!v.is_array()) bad_field(key, "expected an array of integers");
      c.bc.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.bc.push_back(int_field(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "burst_len") {
      c.burst_len = num_field(v, key);
    } else if (key == "rounds") {
      c.rounds = int_field(v, key);
    } else if (key == "clips") {
      c.clips = int_field(v, key);
    } else if (key == "frames") {
      c.frames = int_field(v, key);
    } else if (key == "grid_h") {
      c.grid_h = int_field(v, key);
    } else if (key == "grid_w") {
      c.grid_w = int_field(v, key);
    } else if (key == "mask_files") {
      if (!v.is_array()) bad_field(key, "expected an array of paths");
      c.mask_files.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.mask_files.push_back(str_field(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "seeds_per_cell") {
      c.seeds_per_cell = int_field(v, key);
    } else if (key == "policies") {
      if (!v.is_array()) bad_field(key, "expected an array of policy names");
      c.policies.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = key + "[" + std::to_string(i) + "]";
        try {
          c.policies.push_back(policy_from_string(str_field(v[i], path)));
        } catch (const config_error&) {
          throw;
        } catch (const std::exception& e) {
          bad_field(path, e.what());
        }
      }
    } else if (key == "granularity") {
      try {
        c.granularity = granularity_from_string(str_field(v, key));
      } catch (const std::exception& e) {
        bad_field(key, e.what());
      }
    } else if (key == "u_init") {
      c.u_init = int_field(v, key);
    } else if (key == "f_init") {
      c.f_init = num_field(v, key);
    } else if (key == "c_init") {
      c.c_init = num_field(v, key);
    } else if (key == "c_rtt") {
      c.c_rtt = num_field(v, key);
    } else if (key == "c_pkt") {
      c.c_pkt = num_field(v, key);
    } else if (key == "c_inp") {
      c.c_inp = num_field(v, key);
    } else if (key == "tau_trig") {
      c.tau_trig = num_field(v, key);
    } else if (key == "alpha") {
      c.alpha = num_field(v, key);
    } else if (key == "bootstrap_resamples") {
      c.bootstrap_resamples = int_field(v, key);
    } else if (key == "trace_mode") {
      try {
        c.trace_mode = trace_mode_from_string(str_field(v, key));
      } catch (const config_error& e) {
        bad_field(key, e.what());
      }
    } else if (key == "output_dir") {
      c.output_dir = str_field(v, key);
    } else if (key == "workers") {
      c.workers = int_field(v, key);
    } else {
      throw config_error("unknown config field '" + key + "'");
    }
  }
  validate_sweep_config(c);
  return c;
}

std::string sweep_config_to_json(const SweepConfig& c) {
  json j;
  j["base_seed"] = c.base_seed;
  j["per"] = c.per;
  j["k"] = c.k;
  j["bc"] = c.bc;
  j["burst_len"] = c.burst_len;
  j["rounds"] = c.rounds;
  j["clips"] = c.clips;
  j["frames"] = c.frames;
  j["grid_h"] = c.grid_h;
  j["grid_w"] = c.grid_w;
  j["mask_files"] = c.mask_files;
  j["seeds_per_cell"] = c.seeds_per_cell;
  json pol = json::array();
  for (PolicyKind p : c.policies) pol.push_back(to_string(p));
  j["policies"] = pol;
  j["granularity"] = to_string(c.granularity);
  j["u_init"] = c.u_init;
  j["f_init"] = c.f_init;
  j["c_init"] = c.c_init;
  j["c_rtt"] = c.c_rtt;
  j["c_pkt"] = c.c_pkt;
  j["c_inp"] = c.c_inp;
  j["tau_trig"] = c.tau_trig;
  j["alpha"] = c.alpha;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["trace_mode"] = to_string(c.trace_mode);
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  return j.dump(2);
}

void validate_sweep_config(const SweepConfig& c) {
  if (c.per.empty()) throw config_error("config field 'per': needs at least one value");
  for (double p : c.per) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw config_error("config field 'per': values must lie in [0, 1)");
    }
  }
  if (c.k.empty()) throw config_error("config field 'k': needs at least one value");
  for (int k : c.k) {
    if (k < 1) throw config_error("config field 'k': values must be positive");
  }
  if (c.bc.empty()) throw config_error("config field 'bc': needs at least one value");
  if (c.u_init != 0 && c.u_init != 1) {
    throw config_error("config field 'u_init': must be 0 or 1");
  }
  for (int b : c.bc) {
    if (b < c.u_init) {
      throw config_error("config field 'bc': values must cover u_init");
    }
  }
  if (!(c.burst_len >= 1.0)) throw config_error("config field 'burst_len': must be >= 1");
  if (c.rounds < 1) throw config_error("config field 'rounds': must be >= 1");
  if (c.mask_files.empty()) {
    if (c.clips < 1) throw config_error("config field 'clips': must be >= 1");
    if (c.frames < 2) throw config_error("config field 'frames': must be >= 2");
    if (c.grid_h < 1 || c.grid_w < 1) {
      throw config_error("config field 'grid_h'/'grid_w': must be >= 1");
    }
  }
  if (c.seeds_per_cell < 1) {
    throw config_error("config field 'seeds_per_cell': must be >= 1");
  }
  if (c.policies.empty()) {
    throw config_error("config field 'policies': needs at least one policy");
  }
  std::set<PolicyKind> seen;
  for (PolicyKind p : c.policies) {
    if (!seen.insert(p).second) {
      throw config_error("config field 'policies': duplicate policy '" + to_string(p) + "'");
    }
  }
  if (!(c.f_init >= 0.0 && c.f_init <= 1.0)) {
    throw config_error("config field 'f_init': must lie in [0, 1]");
  }
  if (c.c_init < 0 || c.c_rtt < 0 || c.c_pkt < 0 || c.c_inp < 0) {
    throw config_error("config field 'c_*': costs must be nonnegative");
  }
  if (c.tau_trig < 0) throw config_error("config field 'tau_trig': must be nonnegative");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw config_error("config field 'alpha': must lie in (0, 1)");
  }
  if (c.bootstrap_resamples < 1) {
    throw config_error("config field 'bootstrap_resamples': must be >= 1");
  }
  if (c.workers < 0) throw config_error("config field 'workers': must be >= 0");
}

void apply_env_overrides(SweepConfig& config) {
  if (const char* dir = std::getenv("TUBEHARQ_OUTPUT_DIR")) {
    if (*dir) config.output_dir = dir;
  }
  if (const char* w = std::getenv("TUBEHARQ_WORKERS")) {
    try {
      std::size_t pos = 0;
      const int n = std::stoi(w, &pos);
      if (pos != std::string(w).size() || n < 0) throw std::invalid_argument("");
      config.workers = n;
    } catch (const std::exception&) {
      throw config_error(std::string("TUBEHARQ_WORKERS: expected a nonnegative integer, got '") + w + "'");
    }
  }
}

Corpus build_corpus(const SweepConfig& config) {
  validate_sweep_config(config);
  Corpus corpus;
  const StreamKey base{config.base_seed};
  const int count = config.mask_files.empty()
                        ? config.clips
                        : static_cast<int>(config.mask_files.size());
  corpus.clips.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ClipBundle bundle;
    const StreamKey clip_key = derive(base, "clip", static_cast<std::uint64_t>(i));
    bundle.clip_seed = clip_key.v;
    if (config.mask_files.empty()) {
      const Universe u = build_universe(config.frames, config.grid_h, config.grid_w);
      ClipGenParams params;
      params.num_objects = 2 + (i % 3);
      params.motion_level = (i < config.clips / 2) ? kLowMotion : kHighMotion;
      bundle.masks = generate_synthetic_clip(u, params, clip_key);
    } else {
      bundle.masks = load_masks(config.mask_files[static_cast<std::size_t>(i)]);
    }
    bundle.mu = motion_score(bundle.masks);
    bundle.catalog = std::make_unique<PackageCatalog>(
        build_catalog(bundle.masks, SplitParams{}));
    bundle.distortion = std::make_unique<DistortionModel>(
        *bundle.catalog, DistortionParams{}, clip_key);
    corpus.clips.push_back(std::move(bundle));
  }

  std::vector<double> mus;
  mus.reserve(corpus.clips.size());
  for (const ClipBundle& b : corpus.clips) mus.push_back(b.mu);
  std::sort(mus.begin(), mus.end());
  const std::size_t n = mus.size();
  corpus.median_mu = (n % 2 == 1) ? mus[n / 2]
                                  : (mus[n / 2 - 1] + mus[n / 2]) / 2.0;
  for (ClipBundle& b : corpus.clips) {
    b.stratum = (b.mu <= corpus.median_mu) ? "low" : "high";
  }
  return corpus;
}

std::vector<SessionJob> enumerate_jobs(const SweepConfig& config) {
  const int clip_count = config.mask_files.empty()
                             ? config.clips
                             : static_cast<int>(config.mask_files.size());
  std::vector<SessionJob> jobs;
  jobs.reserve(config.per.size() * config.k.size() * config.bc.size() *
               static_cast<std::size_t>(clip_count) *
               static_cast<std::size_t>(config.seeds_per_cell) *
               config.policies.size());
  for (int pi = 0; pi < static_cast<int>(config.per.size()); ++pi) {
    for (int ki = 0; ki < static_cast<int>(config.k.size()); ++ki) {
      for (int bi = 0; bi < static_cast<int>(config.bc.size()); ++bi) {
        for (int ci = 0; ci < clip_count; ++ci) {
          for (int si = 0; si < config.seeds_per_cell; ++si) {
            for (int li = 0; li < static_cast<int>(config.policies.size()); ++li) {
              jobs.push_back(SessionJob{pi, ki, bi, ci, si, li});
            }
          }
        }
      }
    }
  }
  return jobs;
}

std::size_t job_index(const SweepConfig& config, const SessionJob& job) {
  const std::size_t clip_count = config.mask_files.empty()
                                     ? static_cast<std::size_t>(config.clips)
                                     : config.mask_files.size();
  std::size_t idx = static_cast<std::size_t>(job.per_idx);
  idx = idx * config.k.size() + static_cast<std::size_t>(job.k_idx);
  idx = idx * config.bc.size() + static_cast<std::size_t>(job.bc_idx);
  idx = idx * clip_count + static_cast<std::size_t>(job.clip_idx);
  idx = idx * static_cast<std::size_t>(config.seeds_per_cell) +
        static_cast<std::size_t>(job.seed_idx);
  idx = idx * config.policies.size() + static_cast<std::size_t>(job.policy_idx);
  return idx;
}

std::string session_name(const SweepConfig& config, const SessionJob& job) {
  std::string name = to_string(config.policies[static_cast<std::size_t>(job.policy_idx)]);
  name += "_per" + fmt_double(config.per[static_cast<std::size_t>(job.per_idx)]);
  name += "_k" + std::to_string(config.k[static_cast<std::size_t>(job.k_idx)]);
  name += "_bc" + std::to_string(config.bc[static_cast<std::size_t>(job.bc_idx)]);
  name += "_clip" + std::to_string(job.clip_idx);
  name += "_seed" + std::to_string(job.seed_idx);
  return name;
}

SessionConfig cell_config(const SweepConfig& config, const SessionJob& job) {
  SessionConfig c;
  c.rounds = config.rounds;
  c.request_budget = config.k[static_cast<std::size_t>(job.k_idx)];
  c.compute_budget = config.bc[static_cast<std::size_t>(job.bc_idx)];
  c.u_init = config.u_init;
  c.f_init = config.f_init;
  c.c_init = config.c_init;
  c.c_rtt = config.c_rtt;
  c.c_pkt = config.c_pkt;
  c.c_inp = config.c_inp;
  c.tau_trig = config.tau_trig;
  c.transport = transport_of(config.policies[static_cast<std::size_t>(job.policy_idx)]);
  c.granularity = config.granularity;
  return c;
}

namespace {

SessionTrace run_one(const SweepConfig& config, const Corpus& corpus,
                     const SessionJob& job) {
  const ClipBundle& clip = corpus.clips[static_cast<std::size_t>(job.clip_idx)];
  const StreamKey base{config.base_seed};
  SessionSetup setup;
  setup.catalog = clip.catalog.get();
  setup.distortion = clip.distortion.get();
  setup.config = cell_config(config, job);
  setup.policy = PolicySpec{config.policies[static_cast<std::size_t>(job.policy_idx)]};
  setup.channel = match_ge_params(config.per[static_cast<std::size_t>(job.per_idx)],
                                  config.burst_len);
  // Shared across policies and cells: gaps pair per channel realization.
  setup.channel_key = derive(base, "channel", static_cast<std::uint64_t>(job.clip_idx),
                             static_cast<std::uint64_t>(job.seed_idx));
  setup.policy_key = derive(base, "policy", static_cast<std::uint64_t>(job.per_idx),
                            static_cast<std::uint64_t>(job.k_idx),
                            static_cast<std::uint64_t>(job.bc_idx),
                            static_cast<std::uint64_t>(job.clip_idx),
                            static_cast<std::uint64_t>(job.seed_idx),
                            static_cast<std::uint64_t>(job.policy_idx));
  setup.session_id = session_name(config, job);
  setup.clip_seed = clip.clip_seed;
  setup.clip_mu = clip.mu;
  setup.stratum = clip.stratum;
  return run_session(setup);
}

int resolve_workers(int requested) {
#ifdef _OPENMP
  if (requested > 0) return requested;
  return std::max(1, omp_get_max_threads());
#else
  (void)requested;
  return 1;
#endif
}

}  // namespace

std::vector<SessionTrace> run_jobs_serial(const SweepConfig& config,
                                          const Corpus& corpus,
                                          const std::vector<SessionJob>& jobs) {
  std::vector<SessionTrace> traces(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    traces[i] = run_one(config, corpus, jobs[i]);
  }
  return traces;
}

std::vector<SessionTrace> run_jobs_parallel(const SweepConfig& config,
                                            const Corpus& corpus,
                                            const std::vector<SessionJob>& jobs,
                                            int workers) {
  std::vector<SessionTrace> traces(jobs.size());
  if (workers < 1) workers = 1;
  bool failed = false;
  std::string first_error;
  const std::int64_t n = static_cast<std::int64_t>(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      traces[static_cast<std::size_t>(i)] =
          run_one(config, corpus, jobs[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!failed) {
          failed = true;
          first_error = e.what();
        }
      }
    }
  }
  if (failed) throw std::runtime_error("sweep session failed: " + first_error);
  return traces;
}

namespace {

constexpr SessionMetric kAllMetrics[] = {
    SessionMetric::j_aois,        SessionMetric::j_aois_instant,
    SessionMetric::recovery_time, SessionMetric::recovery_rounds,
    SessionMetric::d_final,       SessionMetric::reconstructions,
};
constexpr int kMetricCount = 6;
// Gap tables carry the comparison metrics only; d_final and reconstruction
// counts stay in the absolute table.
constexpr int kGapMetricCount = 4;

constexpr const char* kStrata[] = {"all", "low", "high"};

std::string csv_num(double v) { return fmt_double(v); }

}  // namespace

OutputsBundle aggregate_outputs(const SweepConfig& config, const Corpus& corpus,
                                const std::vector<SessionTrace>& traces) {
  const std::vector<SessionJob> jobs = enumerate_jobs(config);
  if (traces.size() != jobs.size()) {
    throw std::invalid_argument("aggregate_outputs: trace count does not match the job grid");
  }
  const int clip_count = static_cast<int>(corpus.clips.size());
  const int P = static_cast<int>(config.per.size());
  const int K = static_cast<int>(config.k.size());
  const int B = static_cast<int>(config.bc.size());
  const int S = config.seeds_per_cell;
  const int L = static_cast<int>(config.policies.size());
  const StreamKey base{config.base_seed};

  std::vector<std::array<double, kMetricCount>> metric_values(traces.size());
  std::vector<AuditStats> audit_values(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (int m = 0; m < kMetricCount; ++m) {
      metric_values[i][static_cast<std::size_t>(m)] =
          session_metric(traces[i], kAllMetrics[m], config.alpha);
    }
    const SessionJob& job = jobs[i];
    const PolicyKind kind = config.policies[static_cast<std::size_t>(job.policy_idx)];
    if (transport_of(kind) == Transport::package) {
      audit_values[i] = audit_stats(
          traces[i], *corpus.clips[static_cast<std::size_t>(job.clip_idx)].catalog);
    }
  }

  const auto idx_of = [&](int pi, int ki, int bi, int ci, int si, int li) {
    return job_index(config, SessionJob{pi, ki, bi, ci, si, li});
  };
  const auto in_stratum = [&](int ci, int stratum) {
    return stratum == 0 ||
           corpus.clips[static_cast<std::size_t>(ci)].stratum == kStrata[stratum];
  };

  OutputsBundle out;

  for (int li = 0; li < L; ++li) {
    for (int pi = 0; pi < P; ++pi) {
      for (int ki = 0; ki < K; ++ki) {
        for (int bi = 0; bi < B; ++bi) {
          for (int st = 0; st < 3; ++st) {
            for (int mi = 0; mi < kMetricCount; ++mi) {
              std::vector<double> vals;
              for (int ci = 0; ci < clip_count; ++ci) {
                if (!in_stratum(ci, st)) continue;
                for (int si = 0; si < S; ++si) {
                  vals.push_back(metric_values[idx_of(pi, ki, bi, ci, si, li)]
                                              [static_cast<std::size_t>(mi)]);
                }
              }
              if (vals.empty()) continue;
              const StreamKey key = derive(
                  base, "boot-agg", static_cast<std::uint64_t>(li),
                  static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(ki),
                  static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(st),
                  static_cast<std::uint64_t>(mi));
              const MeanCi ci_stats =
                  bootstrap_mean_ci(vals, key, config.bootstrap_resamples);
              AggregateRow row;
              row.policy = to_string(config.policies[static_cast<std::size_t>(li)]);
              row.per = config.per[static_cast<std::size_t>(pi)];
              row.k = config.k[static_cast<std::size_t>(ki)];
              row.bc = config.bc[static_cast<std::size_t>(bi)];
              row.stratum = kStrata[st];
              row.metric = to_string(kAllMetrics[mi]);
              row.n = ci_stats.n;
              row.mean = ci_stats.mean;
              row.lo = ci_stats.lo;
              row.hi = ci_stats.hi;
              out.aggregates.push_back(std::move(row));
            }
          }
        }
      }
    }
  }

  int ours_idx = -1;
  for (int li = 0; li < L; ++li) {
    if (config.policies[static_cast<std::size_t>(li)] == PolicyKind::tube_package) {
      ours_idx = li;
    }
  }

  if (ours_idx >= 0 && L > 1) {
    // Every emitted gap is backed by a verified shared channel realization.
    for (int li = 0; li < L; ++li) {
      if (li == ours_idx) continue;
      for (int pi = 0; pi < P; ++pi) {
        for (int ki = 0; ki < K; ++ki) {
          for (int bi = 0; bi < B; ++bi) {
            for (int ci = 0; ci < clip_count; ++ci) {
              for (int si = 0; si < S; ++si) {
                assert_paired(traces[idx_of(pi, ki, bi, ci, si, ours_idx)].header,
                              traces[idx_of(pi, ki, bi, ci, si, li)].header);
              }
            }
          }
        }
      }
    }
    for (int li = 0; li < L; ++li) {
      if (li == ours_idx) continue;
      for (int pi = 0; pi < P; ++pi) {
        for (int ki = 0; ki < K; ++ki) {
          for (int bi = 0; bi < B; ++bi) {
            for (int st = 0; st < 3; ++st) {
              for (int mi = 0; mi < kGapMetricCount; ++mi) {
                std::vector<double> vals;
                for (int ci = 0; ci < clip_count; ++ci) {
                  if (!in_stratum(ci, st)) continue;
                  for (int si = 0; si < S; ++si) {
                    const std::size_t a = idx_of(pi, ki, bi, ci, si, ours_idx);
                    const std::size_t b = idx_of(pi, ki, bi, ci, si, li);
                    vals.push_back(metric_values[a][static_cast<std::size_t>(mi)] -
                                   metric_values[b][static_cast<std::size_t>(mi)]);
                  }
                }
                if (vals.empty()) continue;
                const StreamKey key = derive(
                    base, "boot-gap", static_cast<std::uint64_t>(li),
                    static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(ki),
                    static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(st),
                    static_cast<std::uint64_t>(mi));
                const MeanCi ci_stats =
                    bootstrap_mean_ci(vals, key, config.bootstrap_resamples);
                GapRow row;
                row.baseline = to_string(config.policies[static_cast<std::size_t>(li)]);
                row.per = config.per[static_cast<std::size_t>(pi)];
                row.k = config.k[static_cast<std::size_t>(ki)];
                row.bc = config.bc[static_cast<std::size_t>(bi)];
                row.stratum = kStrata[st];
                row.metric = to_string(kAllMetrics[mi]);
                row.n = ci_stats.n;
                row.mean = ci_stats.mean;
                row.lo = ci_stats.lo;
                row.hi = ci_stats.hi;
                out.gaps.push_back(std::move(row));
              }
            }
          }
        }
      }
    }
  }

  for (int li = 0; li < L; ++li) {
    if (transport_of(config.policies[static_cast<std::size_t>(li)]) !=
        Transport::package) {
      continue;
    }
    for (int pi = 0; pi < P; ++pi) {
      for (int ki = 0; ki < K; ++ki) {
        for (int bi = 0; bi < B; ++bi) {
          for (int st = 0; st < 3; ++st) {
            std::vector<double> ratios;
            std::vector<double> spans;
            int sessions = 0;
            for (int ci = 0; ci < clip_count; ++ci) {
              if (!in_stratum(ci, st)) continue;
              for (int si = 0; si < S; ++si) {
                sessions += 1;
                const AuditStats& a = audit_values[idx_of(pi, ki, bi, ci, si, li)];
                if (!a.defined) continue;
                ratios.push_back(a.ratio);
                spans.push_back(a.mean_span);
              }
            }
            if (sessions == 0) continue;
            AuditRow row;
            row.policy = to_string(config.policies[static_cast<std::size_t>(li)]);
            row.per = config.per[static_cast<std::size_t>(pi)];
            row.k = config.k[static_cast<std::size_t>(ki)];
            row.bc = config.bc[static_cast<std::size_t>(bi)];
            row.stratum = kStrata[st];
            row.sessions = sessions;
            row.defined = static_cast<int>(ratios.size());
            if (!ratios.empty()) {
              const MeanCi rc = bootstrap_mean_ci(
                  ratios,
                  derive(base, "boot-audit-ratio", static_cast<std::uint64_t>(li),
                         static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(ki),
                         static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(st)),
                  config.bootstrap_resamples);
              const MeanCi sc = bootstrap_mean_ci(
                  spans,
                  derive(base, "boot-audit-span", static_cast<std::uint64_t>(li),
                         static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(ki),
                         static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(st)),
                  config.bootstrap_resamples);
              row.ratio_mean = rc.mean;
              row.ratio_lo = rc.lo;
              row.ratio_hi = rc.hi;
              row.span_mean = sc.mean;
              row.span_lo = sc.lo;
              row.span_hi = sc.hi;
            }
            out.audit.push_back(std::move(row));
          }
        }
      }
    }
  }

  out.aggregates_csv = "policy,per,k,bc,stratum,metric,n,mean,ci_lo,ci_hi\n";
  for (const AggregateRow& r : out.aggregates) {
    out.aggregates_csv += r.policy + "," + csv_num(r.per) + "," +
                          std::to_string(r.k) + "," + std::to_string(r.bc) + "," +
                          r.stratum + "," + r.metric + "," + std::to_string(r.n) +
                          "," + csv_num(r.mean) + "," + csv_num(r.lo) + "," +
                          csv_num(r.hi) + "\n";
  }
  if (!out.gaps.empty()) {
    out.gaps_csv = "baseline,per,k,bc,stratum,metric,n,mean_gap,ci_lo,ci_hi\n";
    for (const GapRow& r : out.gaps) {
      out.gaps_csv += r.baseline + "," + csv_num(r.per) + "," +
                      std::to_string(r.k) + "," + std::to_string(r.bc) + "," +
                      r.stratum + "," + r.metric + "," + std::to_string(r.n) + "," +
                      csv_num(r.mean) + "," + csv_num(r.lo) + "," + csv_num(r.hi) +
                      "\n";
    }
  }
  out.audit_csv =
      "policy,per,k,bc,stratum,sessions,defined,ratio_mean,ratio_ci_lo,"
      "ratio_ci_hi,span_mean,span_ci_lo,span_ci_hi\n";
  for (const AuditRow& r : out.audit) {
    out.audit_csv += r.policy + "," + csv_num(r.per) + "," + std::to_string(r.k) +
                     "," + std::to_string(r.bc) + "," + r.stratum + "," +
                     std::to_string(r.sessions) + "," + std::to_string(r.defined);
    if (r.defined > 0) {
      out.audit_csv += "," + csv_num(r.ratio_mean) + "," + csv_num(r.ratio_lo) +
                       "," + csv_num(r.ratio_hi) + "," + csv_num(r.span_mean) +
                       "," + csv_num(r.span_lo) + "," + csv_num(r.span_hi);
    } else {
      out.audit_csv += ",na,na,na,na,na,na";
    }
    out.audit_csv += "\n";
  }
  return out;
}

std::string render_manifest(const SweepConfig& config, const Corpus& corpus) {
  json m;
  m["code_version"] = kCodeVersion;
  const std::string cfg_text = sweep_config_to_json(config);
  m["config"] = json::parse(cfg_text);
  m["config_hash"] = hex64(fnv1a(cfg_text));
  m["median_mu"] = corpus.median_mu;
  json clips = json::array();
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    const ClipBundle& b = corpus.clips[i];
    json c;
    c["index"] = i;
    c["seed"] = hex64(b.clip_seed);
    c["mu"] = b.mu;
    c["stratum"] = b.stratum;
    c["frames"] = b.masks.universe.frames;
    c["grid_h"] = b.masks.universe.grid_h;
    c["grid_w"] = b.masks.universe.grid_w;
    c["catalog_hash"] = hex64(b.catalog->content_hash());
    c["distortion_hash"] = hex64(b.distortion->content_hash());
    clips.push_back(std::move(c));
  }
  m["clips"] = std::move(clips);
  json outputs = json::array({"aggregates.csv", "audit.csv"});
  if (config.policies.size() > 1) {
    bool has_ours = false;
    for (PolicyKind p : config.policies) {
      if (p == PolicyKind::tube_package) has_ours = true;
    }
    if (has_ours) outputs.push_back("gaps.csv");
  }
  if (config.trace_mode == TraceMode::full) outputs.push_back("traces");
  m["outputs"] = std::move(outputs);
  return m.dump(2) + "\n";
}

SweepConfig sweep_config_from_manifest(const std::string& manifest_text) {
  json m;
  try {
    m = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.is_object() || !m.contains("config")) {
    throw config_error("manifest has no 'config' object");
  }
  return sweep_config_from_json(m["config"].dump());
}

SweepResult run_sweep(const SweepConfig& config) {
  validate_sweep_config(config);
  SweepResult result;
  result.config = config;
  result.corpus = build_corpus(config);
  result.jobs = enumerate_jobs(config);
  const int workers = resolve_workers(config.workers);
  result.traces = (workers == 1)
                      ? run_jobs_serial(config, result.corpus, result.jobs)
                      : run_jobs_parallel(config, result.corpus, result.jobs, workers);
  result.outputs = aggregate_outputs(config, result.corpus, result.traces);
  result.manifest_json = render_manifest(config, result.corpus);
  return result;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

SweepResult run_sweep_to_dir(const SweepConfig& config) {
  SweepConfig effective = config;
  apply_env_overrides(effective);
  SweepResult result = run_sweep(effective);
  namespace fs = std::filesystem;
  const fs::path dir(effective.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory: " + dir.string());
  }
  write_file((dir / "aggregates.csv").string(), result.outputs.aggregates_csv);
  write_file((dir / "audit.csv").string(), result.outputs.audit_csv);
  if (!result.outputs.gaps_csv.empty()) {
    write_file((dir / "gaps.csv").string(), result.outputs.gaps_csv);
  }
  write_file((dir / "manifest.json").string(), result.manifest_json);
  if (effective.trace_mode == TraceMode::full) {
    fs::create_directories(dir / "traces", ec);
    if (ec) {
      throw std::runtime_error("cannot create trace directory under " + dir.string());
    }
    for (std::size_t i = 0; i < result.jobs.size(); ++i) {
      const std::string name = session_name(effective, result.jobs[i]);
      save_trace(result.traces[i], (dir / "traces" / (name + ".jsonl")).string());
    }
  }
  return result;
}

}  // namespace tubeharq
