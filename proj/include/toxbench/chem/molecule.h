// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace toxbench::chem {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

// Contribution to the bond-order sum used by valence rules (aromatic = 1; the
// extra pi electron is accounted for per atom).
int valence_contribution(BondOrder order);
char bond_symbol(BondOrder order);

struct Atom {
  std::string element;  // element symbol as in the periodic table, "*" for wildcard
  int atomic_number = 0;
  bool aromatic = false;
  int formal_charge = 0;
  int isotope = 0;       // 0 = unspecified
  int explicit_h = 0;    // hydrogens written inside brackets
  int implicit_h = 0;    // derived from default valences; 0 for bracket atoms
  bool bracket = false;
  bool in_ring = false;
  int degree = 0;        // heavy-atom neighbours
  bool has_stereo = false;  // @/@@ seen; ignored downstream

  bool is_hydrogen() const { return atomic_number == 1; }
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;
  bool has_stereo = false;  // written with / or \; ignored downstream

  int other(int atom) const { return atom == a ? b : a; }
};

struct Neighbor {
  int atom;
  int bond;
};

class Molecule {
public:
  Molecule() = default;

  // Validates the graph and derives implicit hydrogens, degrees and ring
  // flags. Atom fields other than element/atomic_number/aromatic/charge/
  // isotope/explicit_h/bracket/has_stereo are recomputed.
  //
  // Throws ParseError (kind valence_violation or bad_token) with position 0
  // when the graph itself is inconsistent; the SMILES parser calls this with
  // per-atom source positions so diagnostics point into the text.
  static Molecule from_graph(std::vector<Atom> atoms, std::vector<Bond> bonds, std::string source,
                             const std::vector<std::size_t> &atom_positions = {});

  const std::vector<Atom> &atoms() const { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }
  const std::string &source() const { return source_; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }

  const std::vector<Neighbor> &neighbors(int atom) const { return adjacency_[atom]; }

  // Bond index between two atoms, or -1.
  int find_bond(int a, int b) const;

  // Hydrogens attached to the atom: explicit + implicit + neighbouring [H] atoms.
  int total_h(int atom) const;

  // Number of connected components.
  int component_count() const;
  // Component label per atom, labels in order of first appearance.
  std::vector<int> component_labels() const;

  std::size_t heavy_atom_count() const;

private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::string source_;
};

struct RingMembership {
  std::vector<bool> atoms;
  std::vector<bool> bonds;
};

// An atom or bond is flagged iff it lies on at least one simple cycle, i.e.
// the bond is not a bridge of its component.
RingMembership ring_membership(const Molecule &mol);

// Stable hash of (element, degree, total H, formal charge, in_ring, aromatic)
// for each atom; independent of the order atoms were written in.
std::vector<std::uint64_t> initial_atom_invariants(const Molecule &mol);

// Labeled-graph isomorphism (element, charge, aromaticity, isotope, H count,
// bond order). Stereo flags are ignored.
bool are_isomorphic(const Molecule &a, const Molecule &b);

// Writing-order-independent digest used to bucket molecules before an
// isomorphism check. Isomorphic molecules always share a digest.
std::uint64_t graph_invariant_hash(const Molecule &mol);

}  // namespace toxbench::chem
