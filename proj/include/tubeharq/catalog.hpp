#pragma once

#include <string>
#include <vector>

#include "tubeharq/grid.hpp"

namespace tubeharq {

// Spatio-temporal support of one object id (0 = background). mean_support_area
// averages blocks per frame over the frames the tube actually touches.
struct Tube {
  int id = 0;  // equals the object id; background keeps id 0
  int object_id = 0;
  bool background = false;
  std::vector<int> members;  // flat indices, sorted
  double mean_support_area = 0.0;
};

// Atomic transport object: a chunk of one tube, spanning at most max_span
// consecutive frames. remainder marks fragments below min_size that are kept
// whole instead of being merged across tubes.
struct Package {
  int id = 0;
  int tube_id = 0;
  int object_id = 0;
  std::vector<int> members;  // flat indices, frame-major then row-major
  int span = 0;
  int size = 0;
  bool remainder = false;
};

struct SplitParams {
  int max_span = 3;
  int min_size = 4;
  int max_size = 24;
  // Sequential cut size within a window. Chosen well below max_size so the
  // catalog stays requestable at the small per-round budgets.
  int chunk_target = 8;
};

struct PackageCatalog {
  Universe universe;
  SplitParams split;
  std::vector<Tube> tubes;        // background first, then object ids ascending
  std::vector<Package> packages;  // ids 1..P in catalog order
  std::vector<int> package_of;    // flat block -> package index, -1 if uncovered
  std::vector<int> tube_of;       // flat block -> tube index, -1 if uncovered

  const Tube& tube_by_id(int id) const;
  const Package& package_by_id(int id) const;
  std::uint64_t content_hash() const;
};

std::vector<Tube> extract_tubes(const ClipMasks& masks);
std::vector<Package> split_tube_into_packages(const Universe& universe,
                                              const Tube& tube,
                                              const SplitParams& params,
                                              int first_package_id);
PackageCatalog build_catalog(const ClipMasks& masks, const SplitParams& params);

struct ValidationIssue {
  std::string kind;  // e.g. "duplicate-block", "span", "size", "tube-area"
  std::string detail;
};

struct ValidationReport {
  bool valid = true;
  std::vector<ValidationIssue> issues;
};

// Structural audit: packages partition the universe, spans and sizes obey the
// split parameters (remainder packages exempt from min_size), tube references
// and mean support areas are consistent.
ValidationReport validate_catalog(const PackageCatalog& catalog);

PackageCatalog catalog_from_json(const std::string& text);
std::string catalog_to_json(const PackageCatalog& catalog,
                            const std::vector<double>* block_weights = nullptr);
PackageCatalog load_catalog(const std::string& path,
                            std::vector<double>* block_weights = nullptr);
void save_catalog(const PackageCatalog& catalog, const std::string& path,
                  const std::vector<double>* block_weights = nullptr);

}  // namespace tubeharq
