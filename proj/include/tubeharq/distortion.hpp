#pragma once

#include <cstdint>
#include <vector>

#include "tubeharq/catalog.hpp"
#include "tubeharq/rng.hpp"

namespace tubeharq {

struct DistortionParams {
  double object_weight = 3.0;
  double background_weight = 1.0;
  double weight_jitter = 0.1;  // multiplicative, must stay below 1
  double beta = 0.5;           // temporal-persistence coefficient
  double gamma = 1.0;          // saturation exponent
  // Concavity of per-package relief: partially recovered packages count at
  // (missing fraction)^completion_exponent of their weight, so evidence only
  // pays off fully once a package is complete. 1.0 degenerates to a flat
  // per-block sum.
  double completion_exponent = 0.2;
};

// Ground-truth distortion stand-in. Per-block weights are seeded per clip and
// favor object blocks; the persistence term amplifies blocks whose same
// position is also missing in adjacent frames; per-package completion makes
// scattered partial evidence worth less than whole packages.
//
// Guarantees: D(empty) = 0, D(all missing) = 1 exactly, monotone in the
// missing set, range [0, 1].
class DistortionModel {
 public:
  DistortionModel(const PackageCatalog& catalog, const DistortionParams& params,
                  StreamKey clip_seed);
  DistortionModel(const PackageCatalog& catalog, const DistortionParams& params,
                  std::vector<double> weights);

  double eval(const std::vector<std::uint8_t>& missing) const;

  const std::vector<double>& weights() const { return weights_; }
  const DistortionParams& params() const { return params_; }
  std::uint64_t content_hash() const;

 private:
  void build_masses();

  const PackageCatalog* catalog_;
  DistortionParams params_;
  std::vector<double> weights_;       // per flat block, > 0
  std::vector<double> package_mass_;  // all-missing persistence-weighted mass
  double z_ = 0.0;
};

// Receiver-observable proxy: an affine map of the tube-area-weighted missing
// fraction, recalibrated from revealed distortion samples at reconstruction
// events. Never reads the true per-block weights.
class ProxyModel {
 public:
  explicit ProxyModel(const PackageCatalog& catalog, double decay = 0.7);

  // Area-weighted missing fraction in [0, 1].
  double raw(const std::vector<std::uint8_t>& missing) const;

  // clamp(gain * raw + offset, 0, 1); an empty missing set is exactly 0.
  double eval(double raw_value, bool missing_empty) const;

  // Exponentially weighted least squares over revealed (raw, true) pairs.
  // One pair fits exactly through an offset shift; two distinct pairs fit the
  // line through both; repeated identical pairs are a fixed point.
  void calibrate(double raw_value, double revealed_distortion);

  double gain() const { return gain_; }
  double offset() const { return offset_; }
  int samples() const { return static_cast<int>(history_.size()); }

 private:
  struct Pair {
    double raw;
    double d;
  };

  std::vector<double> area_weight_;  // per flat block, observable
  double area_total_ = 0.0;
  double decay_ = 0.7;
  double gain_ = 1.0;
  double offset_ = 0.0;
  std::vector<Pair> history_;
};

}  // namespace tubeharq
