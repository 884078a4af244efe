#include "tubeharq/policies.hpp"

#include <algorithm>
#include <stdexcept>

namespace tubeharq {

PolicyKind policy_from_string(const std::string& s) {
  if (s == "tube_package") return PolicyKind::tube_package;
  if (s == "greedy_block") return PolicyKind::greedy_block;
  if (s == "greedy_block_random") return PolicyKind::greedy_block_random;
  if (s == "tube_weighted_block") return PolicyKind::tube_weighted_block;
  if (s == "hysteresis") return PolicyKind::hysteresis;
  if (s == "offline_plan") return PolicyKind::offline_plan;
  throw std::invalid_argument("unknown policy: " + s);
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::tube_package: return "tube_package";
    case PolicyKind::greedy_block: return "greedy_block";
    case PolicyKind::greedy_block_random: return "greedy_block_random";
    case PolicyKind::tube_weighted_block: return "tube_weighted_block";
    case PolicyKind::hysteresis: return "hysteresis";
    case PolicyKind::offline_plan: return "offline_plan";
  }
  throw std::invalid_argument("unknown policy kind");
}

Transport transport_of(PolicyKind kind) {
  return kind == PolicyKind::tube_package ? Transport::package : Transport::block;
}

std::vector<PackageScore> score_packages(const PackageCatalog& catalog,
                                         const AvailabilityState& avail,
                                         const ScoreWeights& weights) {
  std::vector<PackageScore> scores;
  for (std::size_t i = 0; i < catalog.packages.size(); ++i) {
    const int uncovered = avail.package_uncovered(static_cast<int>(i));
    if (uncovered <= 0) continue;
    const Package& p = catalog.packages[i];
    PackageScore s;
    s.package_id = p.id;
    s.size = p.size;
    s.rho = static_cast<double>(uncovered) / static_cast<double>(p.size);
    s.area = catalog.tube_by_id(p.tube_id).mean_support_area;
    s.span = p.span;
    s.score = weights.w_rho * s.rho + weights.w_area * s.area + weights.w_span * s.span;
    scores.push_back(s);
  }
  return scores;
}

std::vector<int> select_request_tube_package(const std::vector<PackageScore>& scores,
                                             int budget) {
  std::vector<const PackageScore*> order;
  order.reserve(scores.size());
  for (const PackageScore& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const PackageScore* a, const PackageScore* b) {
              if (a->score != b->score) return a->score > b->score;
              return a->package_id < b->package_id;
            });
  std::vector<int> request;
  int used = 0;
  for (const PackageScore* s : order) {
    if (used + s->size > budget) continue;
    request.push_back(s->package_id);
    used += s->size;
  }
  return request;
}

namespace {

struct BlockKey {
  double area;
  int flat;
};

std::vector<BlockKey> missing_blocks_with_area(const PackageCatalog& catalog,
                                               const AvailabilityState& avail) {
  std::vector<BlockKey> blocks;
  const int total = catalog.universe.total_blocks();
  for (int flat = 0; flat < total; ++flat) {
    if (avail.has(flat)) continue;
    const int ti = catalog.tube_of[static_cast<std::size_t>(flat)];
    blocks.push_back({catalog.tubes[static_cast<std::size_t>(ti)].mean_support_area,
                      flat});
  }
  return blocks;
}

std::vector<int> take_prefix(const std::vector<BlockKey>& blocks, int budget) {
  std::vector<int> request;
  const std::size_t n =
      std::min(blocks.size(), static_cast<std::size_t>(std::max(budget, 0)));
  request.reserve(n);
  for (std::size_t i = 0; i < n; ++i) request.push_back(blocks[i].flat);
  return request;
}

}  // namespace

std::vector<int> select_request_greedy_block(const PackageCatalog& catalog,
                                             const AvailabilityState& avail,
                                             int budget) {
  auto blocks = missing_blocks_with_area(catalog, avail);
  std::stable_sort(blocks.begin(), blocks.end(), [](const BlockKey& a, const BlockKey& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.flat < b.flat;
  });
  return take_prefix(blocks, budget);
}

std::vector<int> select_request_greedy_block_random(const PackageCatalog& catalog,
                                                    const AvailabilityState& avail,
                                                    int budget, CounterRng& rng) {
  auto blocks = missing_blocks_with_area(catalog, avail);
  // Fisher-Yates over the flat-ordered missing list, consuming the session's
  // policy stream in round order.
  for (std::size_t i = blocks.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(blocks[i - 1], blocks[j]);
  }
  return take_prefix(blocks, budget);
}

std::vector<int> select_request_tube_weighted_block(const PackageCatalog& catalog,
                                                    const AvailabilityState& avail,
                                                    const ScoreWeights& weights,
                                                    int budget) {
  const auto scores = score_packages(catalog, avail, weights);
  std::vector<double> score_of(catalog.packages.size(), 0.0);
  for (const PackageScore& s : scores)
    score_of[static_cast<std::size_t>(s.package_id - 1)] = s.score;

  struct WeightedKey {
    double score;
    double area;
    int flat;
  };
  std::vector<WeightedKey> blocks;
  const int total = catalog.universe.total_blocks();
  for (int flat = 0; flat < total; ++flat) {
    if (avail.has(flat)) continue;
    const int pi = catalog.package_of[static_cast<std::size_t>(flat)];
    const int ti = catalog.tube_of[static_cast<std::size_t>(flat)];
    blocks.push_back({score_of[static_cast<std::size_t>(pi)],
                      catalog.tubes[static_cast<std::size_t>(ti)].mean_support_area,
                      flat});
  }
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const WeightedKey& a, const WeightedKey& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.area != b.area) return a.area > b.area;
                     return a.flat < b.flat;
                   });
  std::vector<int> request;
  const std::size_t n =
      std::min(blocks.size(), static_cast<std::size_t>(std::max(budget, 0)));
  request.reserve(n);
  for (std::size_t i = 0; i < n; ++i) request.push_back(blocks[i].flat);
  return request;
}

HysteresisLatch::HysteresisLatch(double tau_hi, double tau_lo)
    : tau_hi_(tau_hi), tau_lo_(tau_lo) {
  if (!(tau_lo < tau_hi))
    throw std::invalid_argument("hysteresis: tau_lo must be < tau_hi");
}

bool HysteresisLatch::update(double d_hat) {
  if (d_hat >= tau_hi_) {
    on_ = true;
  } else if (d_hat < tau_lo_) {
    on_ = false;
  }
  return on_;
}

double surrogate_auc(const std::vector<double>& raws,
                     const std::vector<int>& budget_units,
                     const std::vector<std::uint8_t>& schedule,
                     const SessionConfig& config) {
  const std::size_t rounds = schedule.size();
  if (raws.size() != rounds + 1)
    throw std::invalid_argument("surrogate_auc: raws must have rounds+1 entries");
  if (budget_units.size() != rounds)
    throw std::invalid_argument("surrogate_auc: budget_units size mismatch");

  double level = config.u_init ? raws[0] : 1.0;
  double t_prev = config.c_init + config.c_inp * config.u_init;
  double j = t_prev * t_prev / 2.0 * level;
  for (std::size_t r = 0; r < rounds; ++r) {
    const double delta = config.c_rtt + config.c_pkt * budget_units[r];
    const double t = t_prev + delta;
    if (schedule[r]) level = raws[r + 1];
    j += (t * t - t_prev * t_prev) / 2.0 * level;
    t_prev = t;
  }
  return j;
}

OfflinePlan plan_offline(const std::vector<double>& raws,
                         const std::vector<int>& budget_units,
                         const SessionConfig& config) {
  const int rounds = static_cast<int>(budget_units.size());
  const int events =
      std::min(std::max(config.compute_budget - config.u_init, 0), rounds);

  OfflinePlan best;
  best.schedule.assign(static_cast<std::size_t>(rounds), 0);

  // First lexicographic size-`events` combination.
  std::vector<int> combo(static_cast<std::size_t>(events));
  for (int i = 0; i < events; ++i) combo[static_cast<std::size_t>(i)] = i;

  bool first = true;
  while (true) {
    std::vector<std::uint8_t> schedule(static_cast<std::size_t>(rounds), 0);
    for (int pos : combo) schedule[static_cast<std::size_t>(pos)] = 1;
    const double value = surrogate_auc(raws, budget_units, schedule, config);
    ++best.evaluated;
    if (first || value < best.surrogate) {
      best.surrogate = value;
      best.schedule = schedule;
      first = false;
    }

    // Advance to the next combination, rightmost slot first.
    int k = events - 1;
    while (k >= 0 && combo[static_cast<std::size_t>(k)] == rounds - events + k) --k;
    if (k < 0) break;
    ++combo[static_cast<std::size_t>(k)];
    for (int i = k + 1; i < events; ++i)
      combo[static_cast<std::size_t>(i)] = combo[static_cast<std::size_t>(i - 1)] + 1;
  }
  return best;
}

}  // namespace tubeharq
