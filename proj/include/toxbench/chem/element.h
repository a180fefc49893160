// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace toxbench::chem {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double mass;  // standard atomic weight, g/mol
};

// Looks up an element by its case-sensitive symbol ("Cl", "c" is not a symbol).
const ElementInfo *find_element(std::string_view symbol);
const ElementInfo &element_by_number(int atomic_number);

// Default valences used for implicit hydrogens and the valence check. Empty
// for elements outside the organic subset, which skips valence checking.
std::span<const int> default_valences(int atomic_number);

// Highest allowed valence after adjusting for formal charge; nullopt means
// the element is not valence-checked.
std::optional<int> max_valence(int atomic_number, int formal_charge);

inline constexpr double kHydrogenMass = 1.008;

}  // namespace toxbench::chem
