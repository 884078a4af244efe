#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/channel.hpp"
#include "tubeharq/distortion.hpp"
#include "tubeharq/grid.hpp"
#include "tubeharq/policies.hpp"
#include "tubeharq/protocol.hpp"
#include "tubeharq/rng.hpp"

namespace tubeharq {

enum class TraceMode { summary, full };
TraceMode trace_mode_from_string(const std::string& s);
std::string to_string(TraceMode mode);

// One experiment grid. Cells are (per, k, bc); every cell runs each clip with
// seeds_per_cell channel seeds under every policy, sharing the channel stream
// across policies so gaps are paired per realization.
struct SweepConfig {
  std::uint64_t base_seed = 1;
  std::vector<double> per{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
  std::vector<int> k{8, 16};
  std::vector<int> bc{2, 3};
  double burst_len = 4.0;
  int rounds = 6;

  int clips = 60;  // first half low motion, second half high motion
  int frames = 16;
  int grid_h = 8;
  int grid_w = 8;
  std::vector<std::string> mask_files;  // nonempty: load these instead

  int seeds_per_cell = 20;
  std::vector<PolicyKind> policies{
      PolicyKind::tube_package, PolicyKind::greedy_block,
      PolicyKind::greedy_block_random, PolicyKind::tube_weighted_block,
      PolicyKind::hysteresis};
  ChannelGranularity granularity = ChannelGranularity::package;

  // Session knobs shared by every cell.
  int u_init = 1;
  double f_init = 0.5;
  double c_init = 0.5;
  double c_rtt = 0.01;
  double c_pkt = 1.024e-4;
  double c_inp = 3.0;
  double tau_trig = 0.35;

  double alpha = 0.5;  // recovery threshold used in reports
  int bootstrap_resamples = 1000;

  TraceMode trace_mode = TraceMode::summary;
  std::string output_dir = "sweep_out";
  int workers = 0;  // 0: one per available core
};

// Strict parse: unknown fields are config errors naming the field.
SweepConfig sweep_config_from_json(const std::string& text);
std::string sweep_config_to_json(const SweepConfig& config);
void validate_sweep_config(const SweepConfig& config);

// TUBEHARQ_OUTPUT_DIR and TUBEHARQ_WORKERS are the only supported overrides.
void apply_env_overrides(SweepConfig& config);

struct ClipBundle {
  std::uint64_t clip_seed = 0;
  ClipMasks masks;
  // Owned on the heap so bundle moves never relocate what sessions point at.
  std::unique_ptr<PackageCatalog> catalog;
  std::unique_ptr<DistortionModel> distortion;
  double mu = 0.0;
  std::string stratum;  // "low" or "high" by corpus median split
};

struct Corpus {
  std::vector<ClipBundle> clips;
  double median_mu = 0.0;
};

Corpus build_corpus(const SweepConfig& config);

struct SessionJob {
  int per_idx = 0;
  int k_idx = 0;
  int bc_idx = 0;
  int clip_idx = 0;
  int seed_idx = 0;
  int policy_idx = 0;
};

std::vector<SessionJob> enumerate_jobs(const SweepConfig& config);
std::size_t job_index(const SweepConfig& config, const SessionJob& job);
std::string session_name(const SweepConfig& config, const SessionJob& job);
SessionConfig cell_config(const SweepConfig& config, const SessionJob& job);

// Serial reference and the OpenMP worker-pool version. Both fill one trace
// per job, indexed by job order; results must match exactly.
std::vector<SessionTrace> run_jobs_serial(const SweepConfig& config,
                                          const Corpus& corpus,
                                          const std::vector<SessionJob>& jobs);
std::vector<SessionTrace> run_jobs_parallel(const SweepConfig& config,
                                            const Corpus& corpus,
                                            const std::vector<SessionJob>& jobs,
                                            int workers);

struct AggregateRow {
  std::string policy;
  double per = 0.0;
  int k = 0;
  int bc = 0;
  std::string stratum;  // all, low, high
  std::string metric;
  int n = 0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct GapRow {
  std::string baseline;
  double per = 0.0;
  int k = 0;
  int bc = 0;
  std::string stratum;
  std::string metric;
  int n = 0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct AuditRow {
  std::string policy;
  double per = 0.0;
  int k = 0;
  int bc = 0;
  std::string stratum;
  int sessions = 0;
  int defined = 0;  // sessions that delivered at least one package
  double ratio_mean = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
  double span_mean = 0.0;
  double span_lo = 0.0;
  double span_hi = 0.0;
};

struct OutputsBundle {
  std::vector<AggregateRow> aggregates;
  std::vector<GapRow> gaps;      // empty unless tube_package plus a baseline ran
  std::vector<AuditRow> audit;   // package-transport policies only
  std::string aggregates_csv;
  std::string gaps_csv;          // empty string when gaps are not emitted
  std::string audit_csv;
};

// Deterministic single-threaded reduce over traces in job order. Pairing
// metadata is asserted for every gap.
OutputsBundle aggregate_outputs(const SweepConfig& config, const Corpus& corpus,
                                const std::vector<SessionTrace>& traces);

struct SweepResult {
  SweepConfig config;
  Corpus corpus;
  std::vector<SessionJob> jobs;
  std::vector<SessionTrace> traces;
  OutputsBundle outputs;
  std::string manifest_json;
};

SweepResult run_sweep(const SweepConfig& config);

// run_sweep plus writes aggregates.csv, gaps.csv, audit.csv, manifest.json,
// and traces/*.jsonl (full mode) under config.output_dir.
SweepResult run_sweep_to_dir(const SweepConfig& config);

std::string render_manifest(const SweepConfig& config, const Corpus& corpus);
SweepConfig sweep_config_from_manifest(const std::string& manifest_text);

inline constexpr const char* kCodeVersion = "0.1.0";

}  // namespace tubeharq
