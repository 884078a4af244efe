#pragma once

#include <string>
#include <vector>

#include "tubeharq/rng.hpp"

namespace tubeharq {

// Latent block grid: T frames of grid_h x grid_w blocks. Blocks are addressed
// either as (t, b) with t in 1..T and b in 1..N row-major, or as a flat
// 0-based index (t-1)*N + (b-1).
struct Universe {
  int frames = 0;
  int grid_h = 0;
  int grid_w = 0;

  int blocks_per_frame() const { return grid_h * grid_w; }
  int total_blocks() const { return frames * blocks_per_frame(); }

  int flat(int t, int b) const { return (t - 1) * blocks_per_frame() + (b - 1); }
  int frame_of(int flat_idx) const { return flat_idx / blocks_per_frame() + 1; }
  int block_of(int flat_idx) const { return flat_idx % blocks_per_frame() + 1; }

  bool operator==(const Universe&) const = default;
};

Universe build_universe(int frames, int grid_h, int grid_w);

// Per-frame object-id maps. Id 0 is background; ids never merge.
struct ClipMasks {
  Universe universe;
  std::vector<std::vector<int>> frames;  // [T][N], row-major ids

  int id_at(int t, int b) const {
    return frames[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(b - 1)];
  }
};

ClipMasks masks_from_json(const std::string& text);
std::string masks_to_json(const ClipMasks& masks);
ClipMasks load_masks(const std::string& path);
void save_masks(const ClipMasks& masks, const std::string& path);

// Synthetic clip: axis-aligned rectangles bouncing on the grid. motion_level
// scales how often and how far objects move per frame; kLowMotion/kHighMotion
// are the two corpus presets.
inline constexpr double kLowMotion = 0.5;
inline constexpr double kHighMotion = 1.5;

struct ClipGenParams {
  int num_objects = 3;
  double motion_level = kLowMotion;
  int min_extent = 3;  // rectangle side range, in blocks
  int max_extent = 4;
};

ClipMasks generate_synthetic_clip(const Universe& universe,
                                  const ClipGenParams& params, StreamKey seed);

}  // namespace tubeharq
