#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/grid.hpp"
#include "tubeharq/policies.hpp"
#include "tubeharq/protocol.hpp"
#include "tubeharq/rng.hpp"

using namespace tubeharq;

namespace {

PackageCatalog fuzz_catalog(std::uint64_t seed) {
  const Universe u = build_universe(4, 6, 6);
  ClipGenParams gen;
  gen.num_objects = 2;
  return build_catalog(generate_synthetic_clip(u, gen, StreamKey{seed}),
                       SplitParams{});
}

// Random partial availability: each package independently committed.
AvailabilityState random_avail(const PackageCatalog& cat, CounterRng& rng,
                               double p_commit) {
  AvailabilityState avail(cat);
  for (std::size_t i = 0; i < cat.packages.size(); ++i) {
    if (rng.next_unit() < p_commit) avail.commit_package(static_cast<int>(i));
  }
  return avail;
}

double area_of_block(const PackageCatalog& cat, int flat) {
  return cat.tubes[static_cast<std::size_t>(
                       cat.tube_of[static_cast<std::size_t>(flat)])]
      .mean_support_area;
}

}  // namespace

TEST_CASE("package score combines need, area and span linearly") {
  // One object occupying a fixed 2x3 patch for all 3 frames: 18 blocks, mean
  // support 6. chunk_target 18 keeps it one package of span 3.
  ClipMasks m;
  m.universe = build_universe(3, 4, 4);
  m.frames.assign(3, std::vector<int>(16, 0));
  for (int t = 0; t < 3; ++t) {
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 3; ++c) m.frames[t][static_cast<std::size_t>(r * 4 + c)] = 1;
    }
  }
  SplitParams split;
  split.chunk_target = 18;
  const PackageCatalog cat = build_catalog(m, split);

  const AvailabilityState avail(cat);
  const auto scores = score_packages(cat, avail, ScoreWeights{});
  bool found = false;
  for (const PackageScore& s : scores) {
    const Package& p = cat.package_by_id(s.package_id);
    if (p.object_id != 1) continue;
    found = true;
    CHECK(s.size == 18);
    CHECK(s.span == 3);
    CHECK(s.rho == 1.0);
    CHECK(s.area == doctest::Approx(6.0));
    // 1.0 * 1 + 0.5 * 6 + 0.25 * 3
    CHECK(s.score == doctest::Approx(4.75).epsilon(1e-15));
  }
  REQUIRE(found);
}

TEST_CASE("fully delivered packages stop being candidates") {
  const PackageCatalog cat = fuzz_catalog(60);
  AvailabilityState avail(cat);
  avail.commit_package(0);
  const auto scores = score_packages(cat, avail, ScoreWeights{});
  for (const PackageScore& s : scores) {
    CHECK(s.package_id != cat.packages[0].id);
    CHECK(s.rho > 0.0);
  }
  CHECK(scores.size() == cat.packages.size() - 1);
}

TEST_CASE("greedy package selection scans past misfits") {
  std::vector<PackageScore> scores;
  const auto mk = [](int id, int size, double score) {
    PackageScore s;
    s.package_id = id;
    s.size = size;
    s.score = score;
    return s;
  };

  SUBCASE("budget takes the top scorers that fit") {
    scores = {mk(1, 4, 3.0), mk(2, 4, 2.0), mk(3, 8, 1.0)};
    CHECK(select_request_tube_package(scores, 8) == std::vector<int>{1, 2});
  }

  SUBCASE("a misfit does not end the scan") {
    scores = {mk(1, 8, 3.0), mk(2, 4, 2.0)};
    CHECK(select_request_tube_package(scores, 4) == std::vector<int>{2});
  }

  SUBCASE("ties break toward the lower id") {
    scores = {mk(5, 4, 2.0), mk(2, 4, 2.0)};
    const auto picked = select_request_tube_package(scores, 4);
    CHECK(picked == std::vector<int>{2});
  }

  SUBCASE("nothing fits") {
    scores = {mk(1, 16, 3.0), mk(2, 9, 2.0)};
    CHECK(select_request_tube_package(scores, 8).empty());
  }

  SUBCASE("exact fill") {
    scores = {mk(1, 5, 3.0), mk(2, 3, 2.0), mk(3, 1, 1.0)};
    CHECK(select_request_tube_package(scores, 8) == std::vector<int>{1, 2});
  }
}

TEST_CASE("greedy block ranking is by tube area then flat order") {
  const PackageCatalog cat = fuzz_catalog(61);
  AvailabilityState avail(cat);
  const auto all = select_request_greedy_block(cat, avail, 1 << 20);
  CHECK(static_cast<int>(all.size()) == avail.missing_count());
  for (std::size_t i = 1; i < all.size(); ++i) {
    const double prev = area_of_block(cat, all[i - 1]);
    const double cur = area_of_block(cat, all[i]);
    CHECK(prev >= cur);
    if (prev == cur &&
        cat.tube_of[static_cast<std::size_t>(all[i - 1])] ==
            cat.tube_of[static_cast<std::size_t>(all[i])]) {
      CHECK(all[i - 1] < all[i]);
    }
  }

  const auto top = select_request_greedy_block(cat, avail, 16);
  REQUIRE(top.size() == 16);
  for (std::size_t i = 0; i < top.size(); ++i) CHECK(top[i] == all[i]);
  CHECK(select_request_greedy_block(cat, avail, 16) == top);
}

TEST_CASE("randomized block ranking is a seeded shuffle of the missing set") {
  const PackageCatalog cat = fuzz_catalog(62);
  AvailabilityState avail(cat);
  CounterRng r1(StreamKey{5});
  CounterRng r2(StreamKey{5});
  CounterRng r3(StreamKey{6});
  const auto a = select_request_greedy_block_random(cat, avail, 24, r1);
  const auto b = select_request_greedy_block_random(cat, avail, 24, r2);
  const auto c = select_request_greedy_block_random(cat, avail, 24, r3);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 24);
  std::set<int> uniq(a.begin(), a.end());
  CHECK(uniq.size() == a.size());
  for (int flat : a) CHECK_FALSE(avail.has(flat));
}

TEST_CASE("tube-weighted blocks inherit their package's score") {
  const PackageCatalog cat = fuzz_catalog(63);
  AvailabilityState avail(cat);
  const auto scores = score_packages(cat, avail, ScoreWeights{});
  REQUIRE(!scores.empty());
  int best_id = scores[0].package_id;
  double best = scores[0].score;
  for (const PackageScore& s : scores) {
    if (s.score > best || (s.score == best && s.package_id < best_id)) {
      best = s.score;
      best_id = s.package_id;
    }
  }
  const Package& top_pkg = cat.package_by_id(best_id);

  const auto picked = select_request_tube_weighted_block(cat, avail,
                                                         ScoreWeights{},
                                                         top_pkg.size);
  REQUIRE(static_cast<int>(picked.size()) == top_pkg.size);
  const std::set<int> expect(top_pkg.members.begin(), top_pkg.members.end());
  const std::set<int> got(picked.begin(), picked.end());
  CHECK(got == expect);
}

TEST_CASE("hysteresis latch holds between thresholds") {
  HysteresisLatch latch(0.45, 0.3);
  CHECK_FALSE(latch.on());
  CHECK(latch.update(0.5));
  CHECK(latch.update(0.4));   // in the dead band: stays on
  CHECK_FALSE(latch.update(0.2));
  CHECK_FALSE(latch.update(0.4));  // dead band from off: stays off
  CHECK(latch.update(0.45));       // upper threshold is inclusive
  CHECK_THROWS_AS(HysteresisLatch(0.3, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(HysteresisLatch(0.2, 0.4), std::invalid_argument);
}

TEST_CASE("offline plan enumerates exactly-m schedules") {
  SessionConfig config;
  config.rounds = 6;
  config.compute_budget = 4;
  config.u_init = 1;  // m = 3
  const std::vector<double> raws = {0.8, 0.7, 0.55, 0.4, 0.3, 0.2, 0.1};
  const std::vector<int> units(6, 16);

  const OfflinePlan plan = plan_offline(raws, units, config);
  CHECK(plan.evaluated == 20);  // 6 choose 3
  CHECK(std::accumulate(plan.schedule.begin(), plan.schedule.end(), 0) == 3);

  SessionConfig none = config;
  none.compute_budget = 1;  // m = 0
  const OfflinePlan empty_plan = plan_offline(raws, units, none);
  CHECK(empty_plan.evaluated == 1);
  CHECK(std::accumulate(empty_plan.schedule.begin(), empty_plan.schedule.end(),
                        0) == 0);

  SessionConfig all = config;
  all.compute_budget = 16;  // m saturates at R
  const OfflinePlan full_plan = plan_offline(raws, units, all);
  CHECK(std::accumulate(full_plan.schedule.begin(), full_plan.schedule.end(),
                        0) == 6);
  CHECK(full_plan.evaluated == 1);
}

TEST_CASE("offline plan is optimal over sparser schedules too") {
  CounterRng rng(StreamKey{8080});
  for (int trial = 0; trial < 60; ++trial) {
    SessionConfig config;
    config.rounds = 5;
    config.u_init = 0;
    config.compute_budget = static_cast<int>(rng.next_below(4));
    std::vector<double> raws(6);
    double level = 1.0;
    for (double& r : raws) {
      r = level;
      level *= 0.5 + 0.5 * rng.next_unit();
    }
    std::vector<int> units(5);
    for (int& u : units) u = 4 + static_cast<int>(rng.next_below(13));

    const OfflinePlan plan = plan_offline(raws, units, config);
    const int m = std::min(config.compute_budget, config.rounds);

    // Random schedules with at most m events never beat the plan.
    for (int probe = 0; probe < 40; ++probe) {
      std::vector<std::uint8_t> sched(5, 0);
      int events = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m + 1)));
      int placed = 0;
      while (placed < events) {
        const std::size_t pos = rng.next_below(5);
        if (!sched[pos]) {
          sched[pos] = 1;
          placed += 1;
        }
      }
      const double val = surrogate_auc(raws, units, sched, config);
      CHECK(plan.surrogate <= val);
    }
  }
}

TEST_CASE("adding a reconstruction never increases the surrogate") {
  SessionConfig config;
  config.rounds = 6;
  CounterRng rng(StreamKey{8081});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raws(7);
    double level = 0.9;
    for (double& r : raws) {
      r = level;
      level *= rng.next_unit();
    }
    std::vector<int> units(6, 16);
    std::vector<std::uint8_t> sched(6, 0);
    for (auto& u : sched) u = rng.next_unit() < 0.4 ? 1 : 0;
    const double base = surrogate_auc(raws, units, sched, config);
    for (std::size_t i = 0; i < sched.size(); ++i) {
      if (sched[i]) continue;
      auto more = sched;
      more[i] = 1;
      CHECK(surrogate_auc(raws, units, more, config) <= base);
    }
  }
}

TEST_CASE("every policy respects the budget and requests only missing items") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const PackageCatalog cat = fuzz_catalog(100 + seed);
    CounterRng rng(derive(StreamKey{4242}, "avail", seed));
    AvailabilityState avail = random_avail(cat, rng, 0.4);
    const int budget = 4 + static_cast<int>(rng.next_below(21));

    const auto scores = score_packages(cat, avail, ScoreWeights{});
    const auto tp = select_request_tube_package(scores, budget);
    int used = 0;
    for (int id : tp) {
      const Package& p = cat.package_by_id(id);
      used += p.size;
      bool fully = true;
      for (int flat : p.members) fully = fully && avail.has(flat);
      CHECK_FALSE(fully);
    }
    CHECK(used <= budget);

    const auto gb = select_request_greedy_block(cat, avail, budget);
    CHECK(static_cast<int>(gb.size()) <=
          std::min(budget, avail.missing_count()));
    for (int flat : gb) CHECK_FALSE(avail.has(flat));

    CounterRng prng(derive(StreamKey{4242}, "rand", seed));
    const auto gr = select_request_greedy_block_random(cat, avail, budget, prng);
    CHECK(static_cast<int>(gr.size()) <=
          std::min(budget, avail.missing_count()));
    for (int flat : gr) CHECK_FALSE(avail.has(flat));

    const auto tw = select_request_tube_weighted_block(cat, avail,
                                                       ScoreWeights{}, budget);
    CHECK(static_cast<int>(tw.size()) <=
          std::min(budget, avail.missing_count()));
    for (int flat : tw) CHECK_FALSE(avail.has(flat));
  }
}
