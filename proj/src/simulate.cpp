#include "tubeharq/simulate.hpp"

#include <stdexcept>

#include "tubeharq/util.hpp"

namespace tubeharq {

DeliveryOutcome transmit_request(const PackageCatalog& catalog,
                                 AvailabilityState& avail, ChannelState& channel,
                                 const std::vector<int>& request,
                                 Transport transport,
                                 ChannelGranularity granularity, int budget) {
  DeliveryOutcome out;
  if (transport == Transport::package) {
    for (int id : request) {
      if (id < 1 || id > static_cast<int>(catalog.packages.size()))
        throw std::invalid_argument("transmit_request: unknown package id");
      out.budget_units += catalog.packages[static_cast<std::size_t>(id - 1)].size;
    }
    if (out.budget_units > budget)
      throw protocol_error("transmit_request: request exceeds budget");
    out.channel_units = granularity == ChannelGranularity::unit
                            ? out.budget_units
                            : static_cast<int>(request.size());
    out.erasures = channel.transmit(out.channel_units);
    std::size_t cursor = 0;
    for (int id : request) {
      const int index = id - 1;
      const Package& p = catalog.packages[static_cast<std::size_t>(index)];
      const std::size_t units =
          granularity == ChannelGranularity::unit ? static_cast<std::size_t>(p.size) : 1;
      bool clean = true;
      for (std::size_t i = 0; i < units; ++i)
        if (out.erasures[cursor + i]) clean = false;
      cursor += units;
      if (!clean) continue;
      auto fresh = avail.commit_package(index);
      out.delivered_packages.push_back(id);
      out.committed_blocks.insert(out.committed_blocks.end(), fresh.begin(),
                                  fresh.end());
    }
  } else {
    const int total = catalog.universe.total_blocks();
    for (int flat : request)
      if (flat < 0 || flat >= total)
        throw std::invalid_argument("transmit_request: block id out of range");
    out.budget_units = static_cast<int>(request.size());
    if (out.budget_units > budget)
      throw protocol_error("transmit_request: request exceeds budget");
    // A block is its own channel packet under either granularity.
    out.channel_units = out.budget_units;
    out.erasures = channel.transmit(out.channel_units);
    for (std::size_t i = 0; i < request.size(); ++i) {
      if (out.erasures[i]) continue;
      if (avail.commit_block(request[i])) out.committed_blocks.push_back(request[i]);
    }
  }
  return out;
}

namespace {

std::vector<int> select_request(const PackageCatalog& catalog,
                                const AvailabilityState& avail,
                                const PolicySpec& policy, int budget,
                                CounterRng& policy_rng) {
  switch (policy.kind) {
    case PolicyKind::tube_package:
      return select_request_tube_package(
          score_packages(catalog, avail, policy.weights), budget);
    case PolicyKind::greedy_block:
    case PolicyKind::hysteresis:
    case PolicyKind::offline_plan:
      return select_request_greedy_block(catalog, avail, budget);
    case PolicyKind::greedy_block_random:
      return select_request_greedy_block_random(catalog, avail, budget, policy_rng);
    case PolicyKind::tube_weighted_block:
      return select_request_tube_weighted_block(catalog, avail, policy.weights,
                                                budget);
  }
  throw std::invalid_argument("unknown policy kind");
}

// Replays the channel realization against greedy-block requests to collect
// the schedule-independent raw proxy levels the offline planner scores.
void ghost_greedy_block(const SessionSetup& setup, double raw0,
                        std::vector<double>& raws, std::vector<int>& budget_units) {
  const PackageCatalog& catalog = *setup.catalog;
  AvailabilityState avail(catalog);
  for (int index : initial_payload(catalog, setup.config.f_init))
    avail.commit_package(index);
  ProxyModel proxy(catalog, setup.proxy_decay);
  ChannelState channel(setup.channel, setup.channel_key);

  raws.assign(1, raw0);
  budget_units.clear();
  for (int r = 1; r <= setup.config.rounds; ++r) {
    const auto request =
        select_request_greedy_block(catalog, avail, setup.config.request_budget);
    const auto outcome =
        transmit_request(catalog, avail, channel, request, Transport::block,
                         setup.config.granularity, setup.config.request_budget);
    raws.push_back(proxy.raw(avail.missing_mask()));
    budget_units.push_back(outcome.budget_units);
  }
}

}  // namespace

SessionTrace run_session(const SessionSetup& setup) {
  if (setup.catalog == nullptr || setup.distortion == nullptr)
    throw std::invalid_argument("run_session: catalog and distortion are required");
  const SessionConfig& config = setup.config;
  validate_config(config);
  if (config.transport != transport_of(setup.policy.kind))
    throw config_error("run_session: transport does not match the policy kind");

  const PackageCatalog& catalog = *setup.catalog;
  AvailabilityState avail(catalog);
  for (int index : initial_payload(catalog, config.f_init))
    avail.commit_package(index);

  ProxyModel proxy(catalog, setup.proxy_decay);
  auto missing = avail.missing_mask();
  bool missing_empty = avail.missing_count() == 0;
  const double raw_init = proxy.raw(missing);

  // Without an initial reconstruction there is no displayable output yet, so
  // the committed trajectory starts at the worst level regardless of how much
  // of the payload arrived.
  double d_committed;
  double d_hat;
  if (config.u_init) {
    d_committed = setup.distortion->eval(missing);
    proxy.calibrate(raw_init, d_committed);
    d_hat = proxy.eval(raw_init, missing_empty);
  } else {
    d_committed = 1.0;
    d_hat = proxy.eval(raw_init, missing_empty);
  }

  SessionTrace trace;
  TraceHeader& h = trace.header;
  h.session_id = setup.session_id;
  h.policy = to_string(setup.policy.kind);
  h.config = config;
  h.per = setup.channel.target_per;
  h.burst_len = setup.channel.burst_len;
  h.p01 = setup.channel.p01;
  h.p10 = setup.channel.p10;
  h.channel_key = setup.channel_key.v;
  h.channel_checksum = realization_checksum(setup.channel, setup.channel_key);
  h.clip_seed = setup.clip_seed;
  h.catalog_hash = catalog.content_hash();
  h.distortion_hash = setup.distortion->content_hash();
  h.frames = catalog.universe.frames;
  h.grid_h = catalog.universe.grid_h;
  h.grid_w = catalog.universe.grid_w;
  h.clip_mu = setup.clip_mu;
  h.stratum = setup.stratum;
  h.initial_blocks = avail.delivered_count();
  h.t_init = config.c_init + config.c_inp * config.u_init;
  h.d_init = d_committed;
  h.d_hat_init = d_hat;
  h.proxy_raw_init = raw_init;
  h.calib_gain_init = proxy.gain();
  h.calib_offset_init = proxy.offset();

  OfflinePlan plan;
  if (setup.policy.kind == PolicyKind::offline_plan) {
    std::vector<double> raws;
    std::vector<int> budget_units;
    ghost_greedy_block(setup, raw_init, raws, budget_units);
    plan = plan_offline(raws, budget_units, config);
  }

  ChannelState channel(setup.channel, setup.channel_key);
  CounterRng policy_rng(setup.policy_key);
  HysteresisLatch latch(setup.policy.tau_hi, setup.policy.tau_lo);

  int compute_used = config.u_init;
  double t_prev = h.t_init;
  double d_hat_prev = d_hat;
  double d_committed_prev = d_committed;

  for (int r = 1; r <= config.rounds; ++r) {
    const auto request = select_request(catalog, avail, setup.policy,
                                        config.request_budget, policy_rng);
    const auto outcome =
        transmit_request(catalog, avail, channel, request, config.transport,
                         config.granularity, config.request_budget);

    missing = avail.missing_mask();
    missing_empty = avail.missing_count() == 0;
    const double raw = proxy.raw(missing);
    const double d_instant = setup.distortion->eval(missing);

    const int compute_left = config.compute_budget - compute_used;
    int u = 0;
    switch (setup.policy.kind) {
      case PolicyKind::hysteresis: {
        const bool on = latch.update(d_hat_prev);
        u = on && compute_left > 0 ? 1 : 0;
        break;
      }
      case PolicyKind::offline_plan:
        u = plan.schedule[static_cast<std::size_t>(r - 1)];
        break;
      default:
        u = decide_trigger(d_hat_prev, config.tau_trig, compute_left);
    }
    compute_used += u;

    double d_committed_r;
    double d_hat_r;
    if (u) {
      d_committed_r = d_instant;
      proxy.calibrate(raw, d_instant);
      d_hat_r = proxy.eval(raw, missing_empty);
    } else {
      d_committed_r = d_committed_prev;
      d_hat_r = d_hat_prev;
    }

    const double delta_t =
        config.c_rtt + config.c_pkt * outcome.budget_units + config.c_inp * u;
    const double t = t_prev + delta_t;

    RoundRecord rec;
    rec.round = r;
    rec.requested = request;
    rec.erasures = outcome.erasures;
    rec.channel_units = outcome.channel_units;
    rec.budget_units = outcome.budget_units;
    rec.delivered_packages = outcome.delivered_packages;
    rec.committed_blocks = outcome.committed_blocks;
    rec.u = u;
    rec.delta_t = delta_t;
    rec.t = t;
    rec.proxy_raw = raw;
    rec.d_hat = d_hat_r;
    rec.d_committed = d_committed_r;
    rec.d_instant = d_instant;
    rec.calib_gain = proxy.gain();
    rec.calib_offset = proxy.offset();
    trace.rounds.push_back(std::move(rec));

    t_prev = t;
    d_hat_prev = d_hat_r;
    d_committed_prev = d_committed_r;
  }
  return trace;
}

}  // namespace tubeharq
