#include "tubeharq/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tubeharq/util.hpp"

namespace tubeharq {

const Tube& PackageCatalog::tube_by_id(int id) const {
  for (const auto& t : tubes)
    if (t.id == id) return t;
  throw std::invalid_argument("catalog: unknown tube id " + std::to_string(id));
}

const Package& PackageCatalog::package_by_id(int id) const {
  // Catalog order assigns ids 1..P, so this is a direct lookup when intact.
  if (id >= 1 && static_cast<std::size_t>(id) <= packages.size()) {
    const auto& p = packages[static_cast<std::size_t>(id - 1)];
    if (p.id == id) return p;
  }
  for (const auto& p : packages)
    if (p.id == id) return p;
  throw std::invalid_argument("catalog: unknown package id " +
                              std::to_string(id));
}

std::uint64_t PackageCatalog::content_hash() const {
  std::uint64_t h = kFnvOffset;
  auto mix_int = [&h](int v) { h = fnv1a(&v, sizeof v, h); };
  mix_int(universe.frames);
  mix_int(universe.grid_h);
  mix_int(universe.grid_w);
  for (const auto& p : packages) {
    mix_int(p.id);
    mix_int(p.tube_id);
    mix_int(p.remainder ? 1 : 0);
    for (int m : p.members) mix_int(m);
  }
  for (const auto& t : tubes) {
    mix_int(t.id);
    h = fnv1a(&t.mean_support_area, sizeof(double), h);
  }
  return h;
}

std::vector<Tube> extract_tubes(const ClipMasks& masks) {
  const Universe& u = masks.universe;
  if (masks.frames.size() != static_cast<std::size_t>(u.frames))
    throw std::invalid_argument("extract_tubes: masks do not match universe");
  const auto n = static_cast<std::size_t>(u.blocks_per_frame());

  std::map<int, std::vector<int>> members_by_id;
  for (int t = 1; t <= u.frames; ++t) {
    const auto& frame = masks.frames[static_cast<std::size_t>(t - 1)];
    if (frame.size() != n)
      throw std::invalid_argument("extract_tubes: frame size mismatch");
    for (int b = 1; b <= static_cast<int>(n); ++b)
      members_by_id[frame[static_cast<std::size_t>(b - 1)]].push_back(
          u.flat(t, b));
  }

  // Background (id 0) leads; object tubes follow in ascending id order. This
  // ordering is what the initial-payload rule consumes.
  std::vector<Tube> tubes;
  for (auto& [id, members] : members_by_id) {
    Tube tube;
    tube.id = id;
    tube.object_id = id;
    tube.background = id == 0;
    tube.members = std::move(members);
    std::set<int> frames_touched;
    for (int m : tube.members) frames_touched.insert(u.frame_of(m));
    tube.mean_support_area = static_cast<double>(tube.members.size()) /
                             static_cast<double>(frames_touched.size());
    tubes.push_back(std::move(tube));
  }
  return tubes;
}

namespace {

int span_of(const Universe& u, const std::vector<int>& members) {
  std::set<int> frames;
  for (int m : members) frames.insert(u.frame_of(m));
  return static_cast<int>(frames.size());
}

Package make_package(const Universe& u, const Tube& tube, int id,
                     std::vector<int> members, bool remainder) {
  Package p;
  p.id = id;
  p.tube_id = tube.id;
  p.object_id = tube.object_id;
  p.span = span_of(u, members);
  p.size = static_cast<int>(members.size());
  p.members = std::move(members);
  p.remainder = remainder;
  return p;
}

}  // namespace

std::vector<Package> split_tube_into_packages(const Universe& universe,
                                              const Tube& tube,
                                              const SplitParams& params,
                                              int first_package_id) {
  if (params.max_span < 1 || params.min_size < 1 ||
      params.max_size < params.min_size)
    throw std::invalid_argument("split: bad parameters");
  const int target =
      std::clamp(params.chunk_target, params.min_size, params.max_size);

  // Temporal first: maximal runs of consecutive touched frames, cut into
  // windows of at most max_span frames. Then sequential chunks in (frame,
  // block) order; a tail below min_size is absorbed into the previous chunk
  // when that stays within max_size, otherwise kept as a flagged remainder.
  std::map<int, std::vector<int>> by_frame;
  for (int m : tube.members) by_frame[universe.frame_of(m)].push_back(m);

  std::vector<std::vector<int>> windows;  // member lists
  std::vector<int> current;
  int window_frames = 0;
  int prev_frame = -2;
  for (auto& [frame, blocks] : by_frame) {
    std::sort(blocks.begin(), blocks.end());
    if (frame != prev_frame + 1 || window_frames == params.max_span) {
      if (!current.empty()) windows.push_back(std::move(current));
      current.clear();
      window_frames = 0;
    }
    current.insert(current.end(), blocks.begin(), blocks.end());
    ++window_frames;
    prev_frame = frame;
  }
  if (!current.empty()) windows.push_back(std::move(current));

  std::vector<Package> out;
  int next_id = first_package_id;
  for (auto& window : windows) {
    const int n = static_cast<int>(window.size());
    if (n < params.min_size) {
      out.push_back(make_package(universe, tube, next_id++, window, true));
      continue;
    }
    std::vector<std::vector<int>> chunks;
    for (int start = 0; start < n; start += target) {
      const int len = std::min(target, n - start);
      chunks.emplace_back(window.begin() + start, window.begin() + start + len);
    }
    if (chunks.size() >= 2 &&
        static_cast<int>(chunks.back().size()) < params.min_size) {
      auto tail = std::move(chunks.back());
      chunks.pop_back();
      if (static_cast<int>(chunks.back().size() + tail.size()) <=
          params.max_size) {
        chunks.back().insert(chunks.back().end(), tail.begin(), tail.end());
      } else {
        chunks.push_back(std::move(tail));  // stays below min_size: remainder
      }
    }
    for (auto& chunk : chunks) {
      const bool rem = static_cast<int>(chunk.size()) < params.min_size;
      out.push_back(
          make_package(universe, tube, next_id++, std::move(chunk), rem));
    }
  }
  return out;
}

PackageCatalog build_catalog(const ClipMasks& masks, const SplitParams& params) {
  PackageCatalog cat;
  cat.universe = masks.universe;
  cat.split = params;
  cat.tubes = extract_tubes(masks);

  int next_id = 1;
  for (const auto& tube : cat.tubes) {
    auto packages =
        split_tube_into_packages(cat.universe, tube, params, next_id);
    next_id += static_cast<int>(packages.size());
    cat.packages.insert(cat.packages.end(),
                        std::make_move_iterator(packages.begin()),
                        std::make_move_iterator(packages.end()));
  }

  const int total = cat.universe.total_blocks();
  cat.package_of.assign(static_cast<std::size_t>(total), -1);
  cat.tube_of.assign(static_cast<std::size_t>(total), -1);
  for (std::size_t pi = 0; pi < cat.packages.size(); ++pi)
    for (int m : cat.packages[pi].members)
      cat.package_of[static_cast<std::size_t>(m)] = static_cast<int>(pi);
  for (std::size_t ti = 0; ti < cat.tubes.size(); ++ti)
    for (int m : cat.tubes[ti].members)
      cat.tube_of[static_cast<std::size_t>(m)] = static_cast<int>(ti);
  return cat;
}

ValidationReport validate_catalog(const PackageCatalog& catalog) {
  ValidationReport report;
  auto flag = [&report](std::string kind, std::string detail) {
    report.valid = false;
    report.issues.push_back({std::move(kind), std::move(detail)});
  };

  const int total = catalog.universe.total_blocks();
  std::vector<int> owner(static_cast<std::size_t>(total), -1);
  std::set<int> package_ids;
  std::map<int, std::vector<int>> tube_members;

  for (const auto& p : catalog.packages) {
    if (!package_ids.insert(p.id).second)
      flag("duplicate-id", "package id " + std::to_string(p.id));
    bool tube_found = false;
    for (const auto& t : catalog.tubes)
      if (t.id == p.tube_id) {
        tube_found = true;
        if (t.object_id != p.object_id)
          flag("tube-ref", "package " + std::to_string(p.id) +
                               " object id disagrees with tube");
      }
    if (!tube_found)
      flag("tube-ref", "package " + std::to_string(p.id) + " names missing tube " +
                           std::to_string(p.tube_id));
    if (p.members.empty())
      flag("size", "package " + std::to_string(p.id) + " is empty");
    if (p.size != static_cast<int>(p.members.size()))
      flag("size", "package " + std::to_string(p.id) + " size field mismatch");
    if (!p.remainder && (p.size < catalog.split.min_size ||
                         p.size > catalog.split.max_size))
      flag("size", "package " + std::to_string(p.id) + " size " +
                       std::to_string(p.size) + " outside [" +
                       std::to_string(catalog.split.min_size) + "," +
                       std::to_string(catalog.split.max_size) + "]");
    if (p.remainder && p.size > catalog.split.max_size)
      flag("size", "remainder package " + std::to_string(p.id) +
                       " exceeds max_size");

    std::set<int> frames;
    for (int m : p.members) {
      if (m < 0 || m >= total) {
        flag("range", "package " + std::to_string(p.id) + " block " +
                          std::to_string(m) + " out of range");
        continue;
      }
      frames.insert(catalog.universe.frame_of(m));
      if (owner[static_cast<std::size_t>(m)] != -1)
        flag("duplicate-block",
             "block " + std::to_string(m) + " in packages " +
                 std::to_string(owner[static_cast<std::size_t>(m)]) + " and " +
                 std::to_string(p.id));
      owner[static_cast<std::size_t>(m)] = p.id;
      tube_members[p.tube_id].push_back(m);
    }
    const int span = static_cast<int>(frames.size());
    if (span != p.span)
      flag("span", "package " + std::to_string(p.id) + " span field mismatch");
    if (span < 1 || span > catalog.split.max_span)
      flag("span", "package " + std::to_string(p.id) + " span " +
                       std::to_string(span) + " outside [1," +
                       std::to_string(catalog.split.max_span) + "]");
  }

  for (int m = 0; m < total; ++m)
    if (owner[static_cast<std::size_t>(m)] == -1)
      flag("uncovered", "block " + std::to_string(m) + " not in any package");

  for (const auto& t : catalog.tubes) {
    const auto it = tube_members.find(t.id);
    if (it == tube_members.end()) {
      flag("tube-empty", "tube " + std::to_string(t.id) + " has no packages");
      continue;
    }
    std::set<int> frames;
    for (int m : it->second) frames.insert(catalog.universe.frame_of(m));
    const double area = static_cast<double>(it->second.size()) /
                        static_cast<double>(frames.size());
    if (std::abs(area - t.mean_support_area) > 1e-9)
      flag("tube-area", "tube " + std::to_string(t.id) +
                            " mean_support_area inconsistent with packages");
  }
  return report;
}

std::string catalog_to_json(const PackageCatalog& catalog,
                            const std::vector<double>* block_weights) {
  nlohmann::json j;
  j["universe"] = {{"T", catalog.universe.frames},
                   {"grid_h", catalog.universe.grid_h},
                   {"grid_w", catalog.universe.grid_w}};
  j["split"] = {{"max_span", catalog.split.max_span},
                {"min_size", catalog.split.min_size},
                {"max_size", catalog.split.max_size},
                {"chunk_target", catalog.split.chunk_target}};
  auto& packages = j["packages"] = nlohmann::json::array();
  for (const auto& p : catalog.packages) {
    nlohmann::json pj;
    pj["id"] = p.id;
    pj["owner_tube"] = p.tube_id;
    pj["object_id"] = p.object_id;
    auto& members = pj["members"] = nlohmann::json::array();
    for (int m : p.members)
      members.push_back({catalog.universe.frame_of(m),
                         catalog.universe.block_of(m)});
    pj["span"] = p.span;
    pj["size"] = p.size;
    pj["remainder"] = p.remainder;
    packages.push_back(std::move(pj));
  }
  auto& tubes = j["tubes"] = nlohmann::json::array();
  for (const auto& t : catalog.tubes)
    tubes.push_back({{"id", t.id},
                     {"object_id", t.object_id},
                     {"mean_support_area", t.mean_support_area}});
  if (block_weights != nullptr) j["block_weights"] = *block_weights;
  return j.dump();
}

namespace {

PackageCatalog catalog_from_parsed(const nlohmann::json& j,
                                   std::vector<double>* block_weights) {
  PackageCatalog cat;
  const auto& uj = j.at("universe");
  cat.universe = build_universe(uj.at("T").get<int>(), uj.at("grid_h").get<int>(),
                                uj.at("grid_w").get<int>());
  if (j.contains("split")) {
    const auto& sj = j.at("split");
    cat.split.max_span = sj.at("max_span").get<int>();
    cat.split.min_size = sj.at("min_size").get<int>();
    cat.split.max_size = sj.at("max_size").get<int>();
    cat.split.chunk_target = sj.at("chunk_target").get<int>();
  }
  for (const auto& tj : j.at("tubes")) {
    Tube t;
    t.id = tj.at("id").get<int>();
    t.object_id = tj.at("object_id").get<int>();
    t.background = t.object_id == 0;
    t.mean_support_area = tj.at("mean_support_area").get<double>();
    cat.tubes.push_back(std::move(t));
  }
  for (const auto& pj : j.at("packages")) {
    Package p;
    p.id = pj.at("id").get<int>();
    p.tube_id = pj.at("owner_tube").get<int>();
    p.object_id = pj.at("object_id").get<int>();
    p.span = pj.at("span").get<int>();
    p.size = pj.at("size").get<int>();
    p.remainder = pj.at("remainder").get<bool>();
    for (const auto& m : pj.at("members")) {
      const int t = m.at(0).get<int>();
      const int b = m.at(1).get<int>();
      if (t < 1 || t > cat.universe.frames || b < 1 ||
          b > cat.universe.blocks_per_frame())
        throw std::invalid_argument("catalog: member out of range");
      p.members.push_back(cat.universe.flat(t, b));
    }
    cat.packages.push_back(std::move(p));
  }

  const int total = cat.universe.total_blocks();
  cat.package_of.assign(static_cast<std::size_t>(total), -1);
  cat.tube_of.assign(static_cast<std::size_t>(total), -1);
  for (std::size_t pi = 0; pi < cat.packages.size(); ++pi)
    for (int m : cat.packages[pi].members)
      cat.package_of[static_cast<std::size_t>(m)] = static_cast<int>(pi);
  for (std::size_t ti = 0; ti < cat.tubes.size(); ++ti) {
    // Tube membership is reconstructed from package ownership.
    for (std::size_t pi = 0; pi < cat.packages.size(); ++pi)
      if (cat.packages[pi].tube_id == cat.tubes[ti].id)
        for (int m : cat.packages[pi].members) {
          cat.tube_of[static_cast<std::size_t>(m)] = static_cast<int>(ti);
          cat.tubes[ti].members.push_back(m);
        }
    std::sort(cat.tubes[ti].members.begin(), cat.tubes[ti].members.end());
  }

  if (block_weights != nullptr) {
    block_weights->clear();
    if (j.contains("block_weights")) {
      *block_weights = j.at("block_weights").get<std::vector<double>>();
      if (block_weights->size() != static_cast<std::size_t>(total))
        throw std::invalid_argument("catalog: block_weights size mismatch");
    }
  }
  return cat;
}

}  // namespace

PackageCatalog catalog_from_json(const std::string& text) {
  return catalog_from_parsed(nlohmann::json::parse(text), nullptr);
}

PackageCatalog load_catalog(const std::string& path,
                            std::vector<double>* block_weights) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return catalog_from_parsed(nlohmann::json::parse(ss.str()), block_weights);
}

void save_catalog(const PackageCatalog& catalog, const std::string& path,
                  const std::vector<double>* block_weights) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write catalog file: " + path);
  out << catalog_to_json(catalog, block_weights) << "\n";
}

}  // namespace tubeharq
