// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "toxbench/chem/molecule.h"

namespace toxbench::featurize {

struct FingerprintConfig {
  int radius = 3;     // ECFP6
  int width = 8192;   // folded buckets
  bool counted = true;

  // Throws std::invalid_argument when width < 1 or radius outside [0, 10].
  void validate() const;
};

// One circular environment that survived deduplication.
struct Environment {
  int center;
  int radius;
  std::uint64_t identifier;
};

// Morgan-style environments. At iteration r an atom's identifier hashes
// (r, its identifier at r-1, sorted (bond code, neighbour identifier at r-1)).
// The radius-r environment of an atom exists only if its atom set grew
// compared with radius r-1; environments with the same atom set at the same
// radius are kept once (the smallest identifier wins). Output is sorted by
// (radius, identifier, center).
std::vector<Environment> circular_environments(const chem::Molecule &mol, int radius);

// Folded ECFP count vector of length cfg.width. Binary when !cfg.counted.
std::vector<std::uint32_t> ecfp_counts(const chem::Molecule &mol, const FingerprintConfig &cfg = {});

}  // namespace toxbench::featurize
