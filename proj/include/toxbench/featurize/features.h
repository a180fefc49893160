// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "toxbench/chem/molecule.h"
#include "toxbench/util/matrix.h"

namespace toxbench::featurize {

struct FeatureLayout {
  static constexpr std::size_t kEcfpWidth = 8192;
  static constexpr std::size_t kKeyCount = 166;
  static constexpr std::size_t kDescriptorCount = 200;
  static constexpr std::size_t kToxPatternCount = 827;

  static constexpr std::size_t kKeyOffset = kEcfpWidth;
  static constexpr std::size_t kDescriptorOffset = kKeyOffset + kKeyCount;
  static constexpr std::size_t kToxPatternOffset = kDescriptorOffset + kDescriptorCount;
  static constexpr std::size_t kTotal = kToxPatternOffset + kToxPatternCount;

  static bool is_descriptor(std::size_t index) {
    return index >= kDescriptorOffset && index < kToxPatternOffset;
  }
};
static_assert(FeatureLayout::kTotal == 9385);

using FeatureVector = std::vector<double>;

// ECFP6 counts | structural keys | descriptors | toxicity patterns.
FeatureVector assemble(const chem::Molecule &mol);

// Hash over the shipped pattern and descriptor tables; changes whenever the
// meaning of any slot changes.
std::string layout_hash();

// Feature-matrix file: 16-byte header, then rows, cols and row-major f64.
void write_feature_matrix(const std::string &path, const Matrix &m);
Matrix read_feature_matrix(const std::string &path);

}  // namespace toxbench::featurize
