// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "toxbench/chem/molecule.h"

namespace toxbench::featurize {

inline constexpr std::size_t kDescriptorCount = 200;

// Ordered descriptor names from the shipped layout file (`index<TAB>name`).
struct DescriptorList {
  std::vector<std::string> names;
  std::string content_hash;

  // Throws std::invalid_argument on gaps, duplicates, unknown names or a
  // length other than kDescriptorCount.
  static DescriptorList parse(std::string_view text);
  static const DescriptorList &shipped();
};

// All 200 descriptors in layout order. Sums are accumulated in sorted term
// order so results are bit-identical for every writing of the same graph.
std::vector<double> descriptors(const chem::Molecule &mol);

// Single descriptor by name; throws std::out_of_range if the name is unknown.
double descriptor(const chem::Molecule &mol, std::string_view name);

double molecular_weight(const chem::Molecule &mol);

// Unique cycles made of the shortest cycles through each ring bond, as
// sorted atom lists.
std::vector<std::vector<int>> perceive_rings(const chem::Molecule &mol);

}  // namespace toxbench::featurize
