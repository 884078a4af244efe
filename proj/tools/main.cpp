// Command line front end: clip generation, catalog tooling, single sessions,
// sweeps, and metric recomputation from stored traces.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tubeharq/catalog.hpp"
#include "tubeharq/channel.hpp"
#include "tubeharq/distortion.hpp"
#include "tubeharq/grid.hpp"
#include "tubeharq/metrics.hpp"
#include "tubeharq/policies.hpp"
#include "tubeharq/protocol.hpp"
#include "tubeharq/simulate.hpp"
#include "tubeharq/sweep.hpp"
#include "tubeharq/util.hpp"

namespace fs = std::filesystem;
using namespace tubeharq;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct GenClipsArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int count = 60;
  int frames = 16;
  int grid_h = 8;
  int grid_w = 8;
};

int cmd_gen_clips(const GenClipsArgs& a) {
  fs::create_directories(a.out_dir);
  const Universe u = build_universe(a.frames, a.grid_h, a.grid_w);
  for (int i = 0; i < a.count; ++i) {
    const StreamKey key = derive(StreamKey{a.seed}, "clip", static_cast<std::uint64_t>(i));
    ClipGenParams params;
    params.num_objects = 2 + (i % 3);
    params.motion_level = (i < a.count / 2) ? kLowMotion : kHighMotion;
    const ClipMasks masks = generate_synthetic_clip(u, params, key);
    const std::string path = (fs::path(a.out_dir) / ("clip" + std::to_string(i) + ".json")).string();
    save_masks(masks, path);
  }
  std::cout << "wrote " << a.count << " clips to " << a.out_dir << "\n";
  return 0;
}

struct CatalogBuildArgs {
  std::string masks_path;
  std::string out_path;
  SplitParams split;
  bool with_weights = false;
  std::uint64_t weight_seed = 0;
};

int cmd_catalog_build(const CatalogBuildArgs& a) {
  const ClipMasks masks = load_masks(a.masks_path);
  const PackageCatalog catalog = build_catalog(masks, a.split);
  if (a.with_weights) {
    const DistortionModel model(catalog, DistortionParams{}, StreamKey{a.weight_seed});
    save_catalog(catalog, a.out_path, &model.weights());
  } else {
    save_catalog(catalog, a.out_path);
  }
  std::cout << "catalog: " << catalog.tubes.size() << " tubes, "
            << catalog.packages.size() << " packages, hash "
            << hex64(catalog.content_hash()) << "\n";
  return 0;
}

int cmd_catalog_validate(const std::string& path) {
  std::vector<double> weights;
  const PackageCatalog catalog = load_catalog(path, &weights);
  const ValidationReport report = validate_catalog(catalog);
  if (report.valid) {
    std::cout << "ok: " << catalog.packages.size() << " packages partition "
              << catalog.universe.total_blocks() << " blocks\n";
    return 0;
  }
  for (const ValidationIssue& issue : report.issues) {
    std::cerr << issue.kind << ": " << issue.detail << "\n";
  }
  std::cerr << report.issues.size() << " violations\n";
  return 1;
}

struct SimulateArgs {
  std::string masks_path;
  std::string policy = "tube_package";
  std::string granularity = "package";
  std::string out_path;  // empty: stdout
  std::uint64_t seed = 0;
  double per = 0.2;
  double burst = 4.0;
  SessionConfig config;
};

int cmd_simulate(const SimulateArgs& a) {
  const ClipMasks masks = load_masks(a.masks_path);
  const PackageCatalog catalog = build_catalog(masks, SplitParams{});
  const StreamKey base{a.seed};
  const StreamKey clip_key = derive(base, "clip", std::uint64_t{0});
  const DistortionModel model(catalog, DistortionParams{}, clip_key);

  SessionSetup setup;
  setup.catalog = &catalog;
  setup.distortion = &model;
  setup.config = a.config;
  setup.policy = PolicySpec{policy_from_string(a.policy)};
  setup.config.transport = transport_of(setup.policy.kind);
  setup.config.granularity = granularity_from_string(a.granularity);
  setup.channel = match_ge_params(a.per, a.burst);
  setup.channel_key = derive(base, "channel", std::uint64_t{0}, std::uint64_t{0});
  setup.policy_key = derive(base, "policy", std::uint64_t{0});
  setup.session_id = "cli";
  setup.clip_seed = clip_key.v;
  setup.clip_mu = motion_score(masks);
  setup.stratum = "all";

  const SessionTrace trace = run_session(setup);
  const std::string text = trace_to_jsonl(trace);
  if (a.out_path.empty()) {
    std::cout << text;
  } else {
    write_file(a.out_path, text);
  }
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::string trace_mode;
  bool seed_set = false;
  std::uint64_t seed = 0;
  int workers = -1;  // -1: keep config value
};

int cmd_sweep(const SweepArgs& a) {
  SweepConfig config;
  bool seeded = a.seed_set;
  if (!a.manifest_path.empty()) {
    config = sweep_config_from_manifest(read_file(a.manifest_path));
    seeded = true;  // the manifest pins base_seed
  } else if (!a.config_path.empty()) {
    const std::string text = read_file(a.config_path);
    config = sweep_config_from_json(text);
    if (text.find("base_seed") != std::string::npos) seeded = true;
  }
  if (a.seed_set) config.base_seed = a.seed;
  if (!seeded) {
    std::cerr << "sweep is stochastic: pass --seed or a config with base_seed\n";
    return 2;
  }
  if (!a.out_dir.empty()) config.output_dir = a.out_dir;
  if (a.workers >= 0) config.workers = a.workers;
  if (!a.trace_mode.empty()) config.trace_mode = trace_mode_from_string(a.trace_mode);

  const SweepResult result = run_sweep_to_dir(config);
  std::cout << "ran " << result.jobs.size() << " sessions over "
            << result.corpus.clips.size() << " clips; outputs in "
            << result.config.output_dir << "\n";
  return 0;
}

struct MetricsArgs {
  std::string manifest_path;
  std::string traces_dir;  // default: traces/ next to the manifest
  std::string out_dir;     // empty: only check
  bool check = false;
};

int cmd_metrics(const MetricsArgs& a) {
  const std::string manifest_text = read_file(a.manifest_path);
  const SweepConfig config = sweep_config_from_manifest(manifest_text);
  const fs::path manifest_dir = fs::path(a.manifest_path).parent_path();
  const fs::path traces_dir = a.traces_dir.empty()
                                  ? manifest_dir / "traces"
                                  : fs::path(a.traces_dir);

  const Corpus corpus = build_corpus(config);
  const std::vector<SessionJob> jobs = enumerate_jobs(config);
  std::vector<SessionTrace> traces;
  traces.reserve(jobs.size());
  for (const SessionJob& job : jobs) {
    const fs::path p = traces_dir / (session_name(config, job) + ".jsonl");
    if (!fs::exists(p)) {
      std::cerr << "missing trace: " << p.string() << "\n";
      return 1;
    }
    traces.push_back(load_trace(p.string()));
  }
  const OutputsBundle outputs = aggregate_outputs(config, corpus, traces);

  int status = 0;
  if (a.check) {
    const auto compare = [&](const std::string& name, const std::string& text) {
      if (text.empty()) return;
      const fs::path p = manifest_dir / name;
      if (!fs::exists(p) || read_file(p.string()) != text) {
        std::cerr << "mismatch: recomputed " << name
                  << " differs from the stored file\n";
        status = 1;
      } else {
        std::cout << name << ": recomputation matches byte for byte\n";
      }
    };
    compare("aggregates.csv", outputs.aggregates_csv);
    compare("gaps.csv", outputs.gaps_csv);
    compare("audit.csv", outputs.audit_csv);
  }
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_file((fs::path(a.out_dir) / "aggregates.csv").string(), outputs.aggregates_csv);
    if (!outputs.gaps_csv.empty()) {
      write_file((fs::path(a.out_dir) / "gaps.csv").string(), outputs.gaps_csv);
    }
    write_file((fs::path(a.out_dir) / "audit.csv").string(), outputs.audit_csv);
  }
  if (!a.check && a.out_dir.empty()) {
    std::cout << outputs.aggregates_csv;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"receiver-driven package HARQ simulator"};
  app.require_subcommand(1);

  GenClipsArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-clips", "write a synthetic clip corpus as mask files");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "corpus seed")->required();
  gen_cmd->add_option("--count", gen.count, "number of clips");
  gen_cmd->add_option("--frames", gen.frames, "frames per clip");
  gen_cmd->add_option("--grid-h", gen.grid_h, "grid height");
  gen_cmd->add_option("--grid-w", gen.grid_w, "grid width");

  CLI::App* catalog_cmd = app.add_subcommand("catalog", "catalog tooling");
  catalog_cmd->require_subcommand(1);

  CatalogBuildArgs cb;
  CLI::App* cb_cmd = catalog_cmd->add_subcommand("build", "masks to package catalog");
  cb_cmd->add_option("--masks", cb.masks_path, "clip mask file")->required();
  cb_cmd->add_option("--out", cb.out_path, "catalog output path")->required();
  cb_cmd->add_option("--max-span", cb.split.max_span, "package span cap");
  cb_cmd->add_option("--min-size", cb.split.min_size, "non-remainder size floor");
  cb_cmd->add_option("--max-size", cb.split.max_size, "package size cap");
  cb_cmd->add_option("--chunk-target", cb.split.chunk_target, "target blocks per package");
  cb_cmd->add_flag("--weights", cb.with_weights, "include seeded block weights");
  cb_cmd->add_option("--seed", cb.weight_seed, "weight seed (with --weights)");

  std::string validate_path;
  CLI::App* cv_cmd = catalog_cmd->add_subcommand("validate", "audit a catalog file");
  cv_cmd->add_option("--catalog", validate_path, "catalog path")->required();

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run one session and print its trace");
  sim_cmd->add_option("--masks", sim.masks_path, "clip mask file")->required();
  sim_cmd->add_option("--seed", sim.seed, "session seed")->required();
  sim_cmd->add_option("--policy", sim.policy, "request policy");
  sim_cmd->add_option("--per", sim.per, "target erasure rate");
  sim_cmd->add_option("--burst", sim.burst, "mean burst length");
  sim_cmd->add_option("--granularity", sim.granularity, "channel granularity: package or unit");
  sim_cmd->add_option("--rounds", sim.config.rounds, "feedback rounds");
  sim_cmd->add_option("--k", sim.config.request_budget, "per-round request budget");
  sim_cmd->add_option("--bc", sim.config.compute_budget, "reconstruction budget");
  sim_cmd->add_option("--u-init", sim.config.u_init, "initial reconstruction (0 or 1)");
  sim_cmd->add_option("--f-init", sim.config.f_init, "initial fill fraction");
  sim_cmd->add_option("--tau-trig", sim.config.tau_trig, "reconstruction trigger threshold");
  sim_cmd->add_option("--out", sim.out_path, "trace output path (default stdout)");

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the experiment grid");
  CLI::Option* sw_cfg = sweep_cmd->add_option("--config", sw.config_path, "sweep config JSON");
  sweep_cmd->add_option("--manifest", sw.manifest_path, "rerun from a manifest")->excludes(sw_cfg);
  CLI::Option* sw_seed = sweep_cmd->add_option("--seed", sw.seed, "base seed");
  sweep_cmd->add_option("--out", sw.out_dir, "output directory");
  sweep_cmd->add_option("--workers", sw.workers, "worker threads (0: all cores)");
  sweep_cmd->add_option("--trace-mode", sw.trace_mode, "summary or full");

  MetricsArgs met;
  CLI::App* met_cmd = app.add_subcommand("metrics", "recompute aggregates from stored traces");
  met_cmd->add_option("--manifest", met.manifest_path, "sweep manifest")->required();
  met_cmd->add_option("--traces", met.traces_dir, "trace directory");
  met_cmd->add_option("--out", met.out_dir, "write recomputed CSVs here");
  met_cmd->add_flag("--check", met.check, "compare against the sweep's own CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_clips(gen);
    if (catalog_cmd->parsed()) {
      if (cb_cmd->parsed()) return cmd_catalog_build(cb);
      if (cv_cmd->parsed()) return cmd_catalog_validate(validate_path);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (sweep_cmd->parsed()) {
      sw.seed_set = sw_seed->count() > 0;
      return cmd_sweep(sw);
    }
    if (met_cmd->parsed()) return cmd_metrics(met);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
