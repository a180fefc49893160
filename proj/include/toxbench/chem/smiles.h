// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toxbench/chem/molecule.h"

namespace toxbench::chem {

enum class ParseErrorKind {
  kUnbalancedParenthesis,
  kUnclosedRingBond,
  kUnknownElement,
  kBadCharge,
  kValenceViolation,
  kEmptyInput,
  kBadToken,
};

std::string_view to_string(ParseErrorKind kind);

class ParseError: public std::runtime_error {
public:
  ParseError(ParseErrorKind kind, std::size_t position, const std::string &message);

  ParseErrorKind kind() const { return kind_; }
  // Byte offset into the input; at most the input length.
  std::size_t position() const { return position_; }
  const std::string &detail() const { return detail_; }

private:
  ParseErrorKind kind_;
  std::size_t position_;
  std::string detail_;
};

// Parses a SMILES string: organic subset, bracket atoms (isotope, chirality,
// H count, charge, atom class), branches, ring closures including %nn, dot
// disconnection and lowercase aromatic atoms. Stereo marks are recorded but
// carry no meaning downstream. Leading/trailing whitespace is ignored.
Molecule parse_smiles(std::string_view text);

// Non-throwing variant; exactly one of the members is engaged.
struct ParseOutcome {
  std::optional<Molecule> molecule;
  std::optional<ParseError> error;
};
ParseOutcome try_parse_smiles(std::string_view text);

struct WrittenSmiles {
  std::string text;
  // order[i] is the source-molecule atom written i-th; parsing `text` yields
  // atom i corresponding to mol atom order[i].
  std::vector<int> order;
};

// Writes a (non-canonical) SMILES by depth-first traversal. Each component
// is rooted at the lowest-index atom except the one containing `root`, which
// is written first. With a non-zero `shuffle_seed` the neighbour visiting
// order is permuted, producing alternative writings of the same graph.
WrittenSmiles write_smiles(const Molecule &mol, int root = 0, std::uint64_t shuffle_seed = 0);

}  // namespace toxbench::chem
