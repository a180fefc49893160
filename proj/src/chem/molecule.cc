// SPDX-License-Identifier: Apache-2.0

#include "toxbench/chem/molecule.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "toxbench/chem/element.h"
#include "toxbench/chem/smiles.h"
#include "toxbench/util/hash.h"

namespace toxbench::chem {

int valence_contribution(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle: return 1;
  case BondOrder::kDouble: return 2;
  case BondOrder::kTriple: return 3;
  case BondOrder::kAromatic: return 1;
  }
  return 1;
}

char bond_symbol(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle: return '-';
  case BondOrder::kDouble: return '=';
  case BondOrder::kTriple: return '#';
  case BondOrder::kAromatic: return ':';
  }
  return '-';
}

namespace {

std::size_t position_of(const std::vector<std::size_t> &positions, int atom) {
  if (atom >= 0 && static_cast<std::size_t>(atom) < positions.size()) return positions[atom];
  return 0;
}

// Marks bridges with an iterative Tarjan low-link pass; every non-bridge
// edge lies on a cycle.
std::vector<bool> find_ring_bonds(std::size_t n_atoms, const std::vector<Bond> &bonds,
                                  const std::vector<std::vector<Neighbor>> &adj) {
  std::vector<int> disc(n_atoms, -1), low(n_atoms, 0);
  std::vector<bool> is_bridge(bonds.size(), false);
  int timer = 0;

  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;

  for (std::size_t start = 0; start < n_atoms; ++start) {
    if (disc[start] >= 0) continue;
    disc[start] = low[start] = timer++;
    stack.push_back({static_cast<int>(start), -1, 0});
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next < adj[f.atom].size()) {
        Neighbor nb = adj[f.atom][f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] < 0) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          int parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          if (low[done.atom] > disc[parent]) is_bridge[done.parent_bond] = true;
        }
      }
    }
  }
  std::vector<bool> ring(bonds.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) ring[i] = !is_bridge[i];
  return ring;
}

}  // namespace

Molecule Molecule::from_graph(std::vector<Atom> atoms, std::vector<Bond> bonds, std::string source,
                              const std::vector<std::size_t> &atom_positions) {
  Molecule mol;
  const int n = static_cast<int>(atoms.size());
  mol.adjacency_.assign(atoms.size(), {});

  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    const Bond &bd = bonds[i];
    if (bd.a < 0 || bd.b < 0 || bd.a >= n || bd.b >= n)
      throw ParseError(ParseErrorKind::kBadToken, 0, "bond references a missing atom");
    if (bd.a == bd.b)
      throw ParseError(ParseErrorKind::kBadToken, position_of(atom_positions, bd.a),
                       "bond from an atom to itself");
    if (!seen.emplace(std::min(bd.a, bd.b), std::max(bd.a, bd.b)).second)
      throw ParseError(ParseErrorKind::kBadToken, position_of(atom_positions, bd.b),
                       "duplicate bond between the same pair of atoms");
    if (bd.order == BondOrder::kAromatic && !(atoms[bd.a].aromatic && atoms[bd.b].aromatic))
      throw ParseError(ParseErrorKind::kBadToken, position_of(atom_positions, bd.b),
                       "aromatic bond between non-aromatic atoms");
    mol.adjacency_[bd.a].push_back({bd.b, static_cast<int>(i)});
    mol.adjacency_[bd.b].push_back({bd.a, static_cast<int>(i)});
  }

  for (int i = 0; i < n; ++i) {
    Atom &atom = atoms[i];
    int bond_sum = 0;
    atom.degree = 0;
    for (const auto &nb: mol.adjacency_[i]) {
      bond_sum += valence_contribution(bonds[nb.bond].order);
      if (!atoms[nb.atom].is_hydrogen()) ++atom.degree;
    }

    if (atom.bracket) {
      atom.implicit_h = 0;
      if (auto cap = max_valence(atom.atomic_number, atom.formal_charge);
          cap && bond_sum + atom.explicit_h > *cap) {
        throw ParseError(ParseErrorKind::kValenceViolation, position_of(atom_positions, i),
                         "atom " + std::to_string(i) + " (" + atom.element + ") exceeds valence " +
                             std::to_string(*cap));
      }
      continue;
    }

    atom.explicit_h = 0;
    auto valences = default_valences(atom.atomic_number);
    if (valences.empty()) {
      atom.implicit_h = 0;
      continue;
    }
    int effective = bond_sum;
    // An aromatic atom donates one valence to the pi system when it can
    // still reach its lowest default valence (c, n, b, p); o and s cannot.
    if (atom.aromatic && bond_sum + 1 <= valences.front()) effective += 1;
    auto target = std::find_if(valences.begin(), valences.end(), [&](int v) { return v >= effective; });
    if (target == valences.end())
      throw ParseError(ParseErrorKind::kValenceViolation, position_of(atom_positions, i),
                       "atom " + std::to_string(i) + " (" + atom.element + ") has bond order sum " +
                           std::to_string(bond_sum) + " above its maximum valence " +
                           std::to_string(valences.back()));
    atom.implicit_h = *target - effective;
  }

  auto ring_bonds = find_ring_bonds(atoms.size(), bonds, mol.adjacency_);
  for (auto &atom: atoms) atom.in_ring = false;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    bonds[i].in_ring = ring_bonds[i];
    if (ring_bonds[i]) {
      atoms[bonds[i].a].in_ring = true;
      atoms[bonds[i].b].in_ring = true;
    }
  }

  mol.atoms_ = std::move(atoms);
  mol.bonds_ = std::move(bonds);
  mol.source_ = std::move(source);
  return mol;
}

int Molecule::find_bond(int a, int b) const {
  for (const auto &nb: adjacency_[a])
    if (nb.atom == b) return nb.bond;
  return -1;
}

int Molecule::total_h(int atom) const {
  int h = atoms_[atom].explicit_h + atoms_[atom].implicit_h;
  for (const auto &nb: adjacency_[atom])
    if (atoms_[nb.atom].is_hydrogen()) ++h;
  return h;
}

std::vector<int> Molecule::component_labels() const {
  std::vector<int> label(atoms_.size(), -1);
  int next = 0;
  std::vector<int> queue;
  for (std::size_t s = 0; s < atoms_.size(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    queue.assign(1, static_cast<int>(s));
    while (!queue.empty()) {
      int a = queue.back();
      queue.pop_back();
      for (const auto &nb: adjacency_[a]) {
        if (label[nb.atom] < 0) {
          label[nb.atom] = next;
          queue.push_back(nb.atom);
        }
      }
    }
    ++next;
  }
  return label;
}

int Molecule::component_count() const {
  auto labels = component_labels();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::size_t Molecule::heavy_atom_count() const {
  return static_cast<std::size_t>(
      std::count_if(atoms_.begin(), atoms_.end(), [](const Atom &a) { return !a.is_hydrogen(); }));
}

RingMembership ring_membership(const Molecule &mol) {
  RingMembership rm;
  rm.atoms.reserve(mol.atom_count());
  rm.bonds.reserve(mol.bond_count());
  for (const auto &a: mol.atoms()) rm.atoms.push_back(a.in_ring);
  for (const auto &b: mol.bonds()) rm.bonds.push_back(b.in_ring);
  return rm;
}

std::vector<std::uint64_t> initial_atom_invariants(const Molecule &mol) {
  std::vector<std::uint64_t> out;
  out.reserve(mol.atom_count());
  for (std::size_t i = 0; i < mol.atom_count(); ++i) {
    const Atom &a = mol.atoms()[i];
    out.push_back(Fnv1a()
                      .add_u32(static_cast<std::uint32_t>(a.atomic_number))
                      .add_u32(static_cast<std::uint32_t>(a.degree))
                      .add_u32(static_cast<std::uint32_t>(mol.total_h(static_cast<int>(i))))
                      .add_i64(a.formal_charge)
                      .add_bool(a.in_ring)
                      .add_bool(a.aromatic)
                      .digest());
  }
  return out;
}

namespace {

// Iterated neighbourhood refinement until the partition stops splitting.
std::vector<std::uint64_t> refined_labels(const Molecule &mol) {
  const std::size_t n = mol.atom_count();
  std::vector<std::uint64_t> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom &a = mol.atoms()[i];
    label[i] = Fnv1a()
                   .add_u32(static_cast<std::uint32_t>(a.atomic_number))
                   .add_i64(a.formal_charge)
                   .add_bool(a.aromatic)
                   .add_u32(static_cast<std::uint32_t>(a.isotope))
                   .add_u32(static_cast<std::uint32_t>(mol.total_h(static_cast<int>(i))))
                   .add_u32(static_cast<std::uint32_t>(mol.neighbors(static_cast<int>(i)).size()))
                   .digest();
  }
  auto distinct = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  };
  std::size_t classes = distinct(label);
  std::vector<std::pair<int, std::uint64_t>> env;
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      env.clear();
      for (const auto &nb: mol.neighbors(static_cast<int>(i)))
        env.emplace_back(static_cast<int>(mol.bonds()[nb.bond].order), label[nb.atom]);
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.add_u64(label[i]);
      for (auto [order, l]: env) h.add_u32(static_cast<std::uint32_t>(order)).add_u64(l);
      next[i] = h.digest();
    }
    std::size_t next_classes = distinct(next);
    label = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return label;
}

}  // namespace

std::uint64_t graph_invariant_hash(const Molecule &mol) {
  auto labels = refined_labels(mol);
  std::sort(labels.begin(), labels.end());
  Fnv1a h;
  h.add_u64(mol.atom_count()).add_u64(mol.bond_count());
  for (auto l: labels) h.add_u64(l);
  return h.digest();
}

bool are_isomorphic(const Molecule &a, const Molecule &b) {
  if (a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count()) return false;
  const std::size_t n = a.atom_count();
  if (n == 0) return true;
  auto la = refined_labels(a);
  auto lb = refined_labels(b);
  {
    auto sa = la, sb = lb;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return false;
  }

  // Visit atoms of `a` in BFS order so each step after a component root is
  // constrained by an already-mapped neighbour.
  std::vector<int> order;
  order.reserve(n);
  {
    std::vector<bool> seen(n, false);
    for (std::size_t s = 0; s < n; ++s) {
      if (seen[s]) continue;
      seen[s] = true;
      std::size_t head = order.size();
      order.push_back(static_cast<int>(s));
      while (head < order.size()) {
        int x = order[head++];
        for (const auto &nb: a.neighbors(x))
          if (!seen[nb.atom]) {
            seen[nb.atom] = true;
            order.push_back(nb.atom);
          }
      }
    }
  }

  std::vector<int> map_ab(n, -1), map_ba(n, -1);
  auto consistent = [&](int x, int y) {
    if (la[x] != lb[y]) return false;
    for (const auto &nb: a.neighbors(x)) {
      int mapped = map_ab[nb.atom];
      if (mapped < 0) continue;
      int bond = b.find_bond(y, mapped);
      if (bond < 0 || b.bonds()[bond].order != a.bonds()[nb.bond].order) return false;
    }
    return true;
  };

  struct Frame {
    std::size_t depth;
    int candidate;
  };
  std::vector<Frame> stack{{0, -1}};
  while (!stack.empty()) {
    Frame &f = stack.back();
    int x = order[f.depth];
    if (f.candidate >= 0) {
      map_ba[map_ab[x]] = -1;
      map_ab[x] = -1;
    }
    int y = f.candidate + 1;
    for (; y < static_cast<int>(n); ++y)
      if (map_ba[y] < 0 && consistent(x, y)) break;
    if (y >= static_cast<int>(n)) {
      stack.pop_back();
      continue;
    }
    f.candidate = y;
    map_ab[x] = y;
    map_ba[y] = x;
    if (f.depth + 1 == n) return true;
    stack.push_back({f.depth + 1, -1});
  }
  return false;
}

}  // namespace toxbench::chem
