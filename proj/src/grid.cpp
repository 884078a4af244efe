#include "tubeharq/grid.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tubeharq {

Universe build_universe(int frames, int grid_h, int grid_w) {
  if (frames < 1) throw std::invalid_argument("universe: frames must be >= 1");
  if (grid_h < 1 || grid_w < 1)
    throw std::invalid_argument("universe: grid dims must be >= 1");
  return Universe{frames, grid_h, grid_w};
}

ClipMasks masks_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ClipMasks m;
  m.universe = build_universe(j.at("T").get<int>(), j.at("grid_h").get<int>(),
                              j.at("grid_w").get<int>());
  const auto& frames = j.at("frames");
  if (!frames.is_array() ||
      frames.size() != static_cast<std::size_t>(m.universe.frames))
    throw std::invalid_argument("masks: frames array does not match T");
  const auto n = static_cast<std::size_t>(m.universe.blocks_per_frame());
  for (const auto& f : frames) {
    std::vector<int> ids = f.get<std::vector<int>>();
    if (ids.size() != n)
      throw std::invalid_argument("masks: frame size does not match grid");
    for (int id : ids)
      if (id < 0) throw std::invalid_argument("masks: negative object id");
    m.frames.push_back(std::move(ids));
  }
  return m;
}

std::string masks_to_json(const ClipMasks& masks) {
  nlohmann::json j;
  j["T"] = masks.universe.frames;
  j["grid_h"] = masks.universe.grid_h;
  j["grid_w"] = masks.universe.grid_w;
  j["frames"] = masks.frames;
  return j.dump();
}

ClipMasks load_masks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open masks file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return masks_from_json(ss.str());
}

void save_masks(const ClipMasks& masks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write masks file: " + path);
  out << masks_to_json(masks) << "\n";
}

namespace {

struct RectObject {
  int w, h;    // extents in blocks
  int x, y;    // top-left, 0-based
  int dx, dy;  // current velocity, blocks per move
};

void pick_velocity(RectObject& o, CounterRng& rng) {
  do {
    o.dx = static_cast<int>(rng.next_below(3)) - 1;
    o.dy = static_cast<int>(rng.next_below(3)) - 1;
  } while (o.dx == 0 && o.dy == 0);
}

// Step with reflection: a component that would leave the grid flips sign.
void step_axis(int& pos, int& vel, int step, int lo, int hi) {
  int next = pos + vel * step;
  if (next < lo || next > hi) {
    vel = -vel;
    next = std::clamp(pos + vel * step, lo, hi);
  }
  pos = next;
}

}  // namespace

ClipMasks generate_synthetic_clip(const Universe& universe,
                                  const ClipGenParams& params, StreamKey seed) {
  if (params.num_objects < 0)
    throw std::invalid_argument("clip gen: num_objects must be >= 0");
  if (params.min_extent < 1 || params.max_extent < params.min_extent)
    throw std::invalid_argument("clip gen: bad extent range");
  if (params.max_extent > universe.grid_h || params.max_extent > universe.grid_w)
    throw std::invalid_argument("clip gen: object larger than grid");
  if (params.motion_level < 0.0)
    throw std::invalid_argument("clip gen: motion_level must be >= 0");

  CounterRng rng(derive(seed, "clip-gen"));
  const int extent_span = params.max_extent - params.min_extent + 1;

  std::vector<RectObject> objects;
  for (int i = 0; i < params.num_objects; ++i) {
    RectObject o{};
    o.w = params.min_extent + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(extent_span)));
    o.h = params.min_extent + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(extent_span)));
    o.x = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(universe.grid_w - o.w + 1)));
    o.y = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(universe.grid_h - o.h + 1)));
    pick_velocity(o, rng);
    objects.push_back(o);
  }

  const double move_prob = std::min(1.0, params.motion_level);
  const double big_step_prob = std::max(0.0, params.motion_level - 1.0);

  ClipMasks masks;
  masks.universe = universe;
  masks.frames.resize(static_cast<std::size_t>(universe.frames));
  for (int t = 0; t < universe.frames; ++t) {
    if (t > 0) {
      for (auto& o : objects) {
        if (rng.next_unit() >= move_prob) continue;
        if (rng.next_unit() < 0.15) pick_velocity(o, rng);
        const int step = rng.next_unit() < big_step_prob ? 2 : 1;
        step_axis(o.x, o.dx, step, 0, universe.grid_w - o.w);
        step_axis(o.y, o.dy, step, 0, universe.grid_h - o.h);
      }
    }
    auto& frame = masks.frames[static_cast<std::size_t>(t)];
    frame.assign(static_cast<std::size_t>(universe.blocks_per_frame()), 0);
    // Later object ids paint over earlier ones: occlusion order is fixed.
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const auto& o = objects[i];
      for (int r = o.y; r < o.y + o.h; ++r)
        for (int c = o.x; c < o.x + o.w; ++c)
          frame[static_cast<std::size_t>(r * universe.grid_w + c)] =
              static_cast<int>(i) + 1;
    }
  }
  return masks;
}

}  // namespace tubeharq
