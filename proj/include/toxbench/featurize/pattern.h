// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toxbench/chem/molecule.h"

namespace toxbench::featurize {

// Subgraph-pattern grammar (a small SMARTS dialect).
//
//   pattern  := atom (bond? (atom | ring-digit | '(' chain ')'))*
//   atom     := organic | '*' | 'a' | 'A' | '[' expr ']'
//   organic  := B C N O P S F Cl Br I (aliphatic) | b c n o p s (aromatic)
//   expr     := term (',' term)*              -- OR
//   term     := factor ('&'? factor)*         -- AND, implicit when adjacent
//   factor   := '!'* primitive
//   primitive:= Symbol | symbol | '#'n | '*' | 'a' | 'A' | 'R' | 'R0'
//             | 'H'n | 'D'n | 'X'n | '+'n? | '-'n? | '++' | '--'
//   bond     := ('-' | '=' | '#' | ':' | '~' | '@' | '!@')+   -- AND
//
// Element symbols in brackets follow SMARTS case: [C] aliphatic carbon,
// [c] aromatic, [#6] either. H counts total hydrogens, D heavy neighbours,
// X heavy neighbours plus hydrogens. An omitted bond matches single or
// aromatic. Patterns must be connected.
class PatternError: public std::runtime_error {
public:
  PatternError(std::size_t position, const std::string &message);
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

struct AtomPrimitive {
  enum class Kind { kAny, kAromatic, kAliphatic, kAtomicNumber, kRing, kCharge, kHCount, kDegree, kConnectivity };
  Kind kind = Kind::kAny;
  int value = 0;
  // for kAtomicNumber written as a symbol: required aromaticity
  std::optional<bool> aromatic;
  bool negate = false;

  bool matches(const chem::Molecule &mol, int atom) const;
};

// Disjunction of conjunctions.
struct AtomQuery {
  std::vector<std::vector<AtomPrimitive>> alternatives;
  bool matches(const chem::Molecule &mol, int atom) const;
};

struct BondQuery {
  enum class Order { kDefault, kAny, kSingle, kDouble, kTriple, kAromatic };
  Order order = Order::kDefault;
  std::optional<bool> ring;

  bool matches(const chem::Molecule &mol, int bond) const;
};

struct PatternBond {
  int a;
  int b;
  BondQuery query;
};

class Pattern {
public:
  // Throws PatternError.
  static Pattern compile(std::string_view text);

  const std::string &text() const { return text_; }
  std::size_t atom_count() const { return atoms_.size(); }
  const std::vector<AtomQuery> &atoms() const { return atoms_; }
  const std::vector<PatternBond> &bonds() const { return bonds_; }

  // Pattern atoms reordered so that every atom after the first is bonded to
  // an earlier one; used by the matcher.
  const std::vector<int> &search_order() const { return order_; }

private:
  std::string text_;
  std::vector<AtomQuery> atoms_;
  std::vector<PatternBond> bonds_;
  std::vector<int> order_;
};

// Number of distinct matches, where two embeddings covering the same
// molecule atom set count once.
std::size_t count_matches(const Pattern &pattern, const chem::Molecule &mol);

struct PatternEntry {
  std::size_t index;
  Pattern pattern;
  std::string label;
};

struct PatternSet {
  std::string name;
  std::size_t arity = 0;
  bool binary = false;  // clamp counts to {0,1}
  std::vector<PatternEntry> entries;
  std::string content_hash;

  // Parses `index<TAB>pattern<TAB>label` lines; '#' starts a comment. Throws
  // PatternError (with line number in the message) on any defect.
  static PatternSet parse(std::string name, std::string_view text, std::size_t arity, bool binary);
};

// The shipped 166-slot structural key set (binary) and 827-slot toxicity
// pattern set (raw counts).
const PatternSet &structural_keys();
const PatternSet &toxicity_patterns();

// Vector of length set.arity; undefined positions are zero.
std::vector<double> match_patterns(const chem::Molecule &mol, const PatternSet &set);

}  // namespace toxbench::featurize
