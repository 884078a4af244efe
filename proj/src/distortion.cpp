#include "tubeharq/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tubeharq/util.hpp"

namespace tubeharq {

namespace {

// Count of same-position neighbors of flat index m (frames t-1, t+1) that are
// missing.
inline int persist_count(const Universe& u, const std::vector<std::uint8_t>& missing,
                         int m) {
  const int n = u.blocks_per_frame();
  int c = 0;
  if (m - n >= 0 && missing[static_cast<std::size_t>(m - n)]) ++c;
  if (m + n < u.total_blocks() && missing[static_cast<std::size_t>(m + n)]) ++c;
  return c;
}

std::vector<double> seeded_weights(const PackageCatalog& catalog,
                                   const DistortionParams& params,
                                   StreamKey clip_seed) {
  if (!(params.weight_jitter >= 0.0 && params.weight_jitter < 1.0))
    throw std::invalid_argument("distortion: weight_jitter must be in [0, 1)");
  if (!(params.object_weight > 0.0 && params.background_weight > 0.0))
    throw std::invalid_argument("distortion: weights must be positive");
  CounterRng rng(derive(clip_seed, "block-weights"));
  const int total = catalog.universe.total_blocks();
  std::vector<double> w(static_cast<std::size_t>(total));
  for (int m = 0; m < total; ++m) {
    const int ti = catalog.tube_of[static_cast<std::size_t>(m)];
    if (ti < 0) throw std::invalid_argument("distortion: uncovered block");
    const bool bg = catalog.tubes[static_cast<std::size_t>(ti)].background;
    const double base = bg ? params.background_weight : params.object_weight;
    const double jitter = 1.0 + params.weight_jitter * (2.0 * rng.next_unit() - 1.0);
    w[static_cast<std::size_t>(m)] = base * jitter;
  }
  return w;
}

}  // namespace

DistortionModel::DistortionModel(const PackageCatalog& catalog,
                                 const DistortionParams& params,
                                 StreamKey clip_seed)
    : DistortionModel(catalog, params, seeded_weights(catalog, params, clip_seed)) {}

DistortionModel::DistortionModel(const PackageCatalog& catalog,
                                 const DistortionParams& params,
                                 std::vector<double> weights)
    : catalog_(&catalog), params_(params), weights_(std::move(weights)) {
  if (!(params_.beta >= 0.0))
    throw std::invalid_argument("distortion: beta must be >= 0");
  if (!(params_.gamma > 0.0))
    throw std::invalid_argument("distortion: gamma must be > 0");
  if (!(params_.completion_exponent > 0.0))
    throw std::invalid_argument("distortion: completion exponent must be > 0");
  if (weights_.size() != static_cast<std::size_t>(catalog.universe.total_blocks()))
    throw std::invalid_argument("distortion: weight vector size mismatch");
  for (double w : weights_)
    if (!(w > 0.0))
      throw std::invalid_argument("distortion: block weights must be > 0");
  build_masses();
}

void DistortionModel::build_masses() {
  // Package mass uses the all-missing persistence counts; the same loop shape
  // as eval() so that eval(all missing) reproduces z_ bit for bit.
  const auto& cat = *catalog_;
  const int total = cat.universe.total_blocks();
  std::vector<std::uint8_t> all(static_cast<std::size_t>(total), 1);
  package_mass_.assign(cat.packages.size(), 0.0);
  for (int m = 0; m < total; ++m) {
    const int pi = cat.package_of[static_cast<std::size_t>(m)];
    package_mass_[static_cast<std::size_t>(pi)] +=
        weights_[static_cast<std::size_t>(m)] *
        (1.0 + params_.beta * persist_count(cat.universe, all, m));
  }
  z_ = 0.0;
  for (double mass : package_mass_) z_ += mass;
}

double DistortionModel::eval(const std::vector<std::uint8_t>& missing) const {
  const auto& cat = *catalog_;
  const int total = cat.universe.total_blocks();
  if (missing.size() != static_cast<std::size_t>(total))
    throw std::invalid_argument("distortion: missing mask size mismatch");

  std::vector<double> num(package_mass_.size(), 0.0);
  bool any = false;
  for (int m = 0; m < total; ++m) {
    if (!missing[static_cast<std::size_t>(m)]) continue;
    any = true;
    const int pi = cat.package_of[static_cast<std::size_t>(m)];
    num[static_cast<std::size_t>(pi)] +=
        weights_[static_cast<std::size_t>(m)] *
        (1.0 + params_.beta * persist_count(cat.universe, missing, m));
  }
  if (!any) return 0.0;

  double sum = 0.0;
  for (std::size_t pi = 0; pi < num.size(); ++pi) {
    if (num[pi] <= 0.0) continue;
    const double sigma = num[pi] / package_mass_[pi];
    sum += package_mass_[pi] * std::pow(sigma, params_.completion_exponent);
  }
  const double d = std::pow(sum / z_, params_.gamma);
  return std::clamp(d, 0.0, 1.0);
}

std::uint64_t DistortionModel::content_hash() const {
  std::uint64_t h = kFnvOffset;
  h = fnv1a(&params_.beta, sizeof(double), h);
  h = fnv1a(&params_.gamma, sizeof(double), h);
  h = fnv1a(&params_.completion_exponent, sizeof(double), h);
  h = fnv1a(weights_.data(), weights_.size() * sizeof(double), h);
  return h;
}

ProxyModel::ProxyModel(const PackageCatalog& catalog, double decay)
    : decay_(decay) {
  if (!(decay_ > 0.0 && decay_ <= 1.0))
    throw std::invalid_argument("proxy: decay must be in (0, 1]");
  const int total = catalog.universe.total_blocks();
  area_weight_.assign(static_cast<std::size_t>(total), 0.0);
  for (int m = 0; m < total; ++m) {
    const int ti = catalog.tube_of[static_cast<std::size_t>(m)];
    if (ti < 0) throw std::invalid_argument("proxy: uncovered block");
    area_weight_[static_cast<std::size_t>(m)] =
        catalog.tubes[static_cast<std::size_t>(ti)].mean_support_area;
  }
  area_total_ = 0.0;
  for (double a : area_weight_) area_total_ += a;
}

double ProxyModel::raw(const std::vector<std::uint8_t>& missing) const {
  if (missing.size() != area_weight_.size())
    throw std::invalid_argument("proxy: missing mask size mismatch");
  double s = 0.0;
  for (std::size_t m = 0; m < missing.size(); ++m)
    if (missing[m]) s += area_weight_[m];
  return s / area_total_;
}

double ProxyModel::eval(double raw_value, bool missing_empty) const {
  if (missing_empty) return 0.0;
  return std::clamp(gain_ * raw_value + offset_, 0.0, 1.0);
}

void ProxyModel::calibrate(double raw_value, double revealed_distortion) {
  history_.push_back({raw_value, revealed_distortion});
  const std::size_t n = history_.size();
  if (n == 1) {
    offset_ = revealed_distortion - gain_ * raw_value;
    return;
  }
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::pow(decay_, static_cast<double>(n - 1 - i));
    sw += w;
    swx += w * history_[i].raw;
    swy += w * history_[i].d;
    swxx += w * history_[i].raw * history_[i].raw;
    swxy += w * history_[i].raw * history_[i].d;
  }
  const double det = sw * swxx - swx * swx;
  // Degenerate spread (all raws equal): keep the slope, refit the offset.
  if (det <= 1e-14 * std::max(1.0, swxx * sw)) {
    offset_ = (swy - gain_ * swx) / sw;
    return;
  }
  gain_ = (sw * swxy - swx * swy) / det;
  offset_ = (swy - gain_ * swx) / sw;
}

}  // namespace tubeharq
