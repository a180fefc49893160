// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace toxbench::featurize::embedded {

extern const std::string_view k_structural_keys_tsv;
extern const std::string_view k_toxicity_patterns_tsv;
extern const std::string_view k_descriptors_tsv;

}  // namespace toxbench::featurize::embedded
