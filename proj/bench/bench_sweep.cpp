// Times the OpenMP worker pool against the serial reference on a mid-size
// grid and checks the two produce identical traces.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "tubeharq/protocol.hpp"
#include "tubeharq/sweep.hpp"

using namespace tubeharq;

int main(int argc, char** argv) {
  SweepConfig config;
  config.base_seed = 7;
  config.per = {0.1, 0.2, 0.3};
  config.k = {16};
  config.bc = {3};
  config.clips = 12;
  config.seeds_per_cell = 6;
  config.policies = {PolicyKind::tube_package, PolicyKind::greedy_block,
                     PolicyKind::tube_weighted_block};
  int workers = 0;
  if (argc > 1) workers = std::atoi(argv[1]);
  config.workers = workers;

  const Corpus corpus = build_corpus(config);
  const std::vector<SessionJob> jobs = enumerate_jobs(config);
  std::cout << "grid: " << jobs.size() << " sessions\n";

  using clock = std::chrono::steady_clock;

  const auto t0 = clock::now();
  const auto serial = run_jobs_serial(config, corpus, jobs);
  const auto t1 = clock::now();
  const double serial_s = std::chrono::duration<double>(t1 - t0).count();

  const int pool = workers > 0 ? workers : 0;
  const auto t2 = clock::now();
  const auto parallel = run_jobs_parallel(config, corpus, jobs, pool > 0 ? pool : 4);
  const auto t3 = clock::now();
  const double parallel_s = std::chrono::duration<double>(t3 - t2).count();

  bool identical = serial.size() == parallel.size();
  for (std::size_t i = 0; identical && i < serial.size(); ++i) {
    identical = trace_to_jsonl(serial[i]) == trace_to_jsonl(parallel[i]);
  }

  std::cout << "serial reference: " << serial_s << " s ("
            << jobs.size() / serial_s << " sessions/s)\n";
  std::cout << "worker pool:      " << parallel_s << " s ("
            << jobs.size() / parallel_s << " sessions/s)\n";
  std::cout << "speedup: " << serial_s / parallel_s << "x\n";
  std::cout << "traces identical: " << (identical ? "yes" : "NO") << "\n";
  return identical ? 0 : 1;
}
