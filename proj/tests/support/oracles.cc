// SPDX-License-Identifier: Apache-2.0

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

#include "toxbench/chem/smiles.h"

namespace toxbench::oracles {

double brute_force_auc(const std::vector<double> &scores, const std::vector<int> &labels) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("need both classes");
  return wins / pairs;
}

namespace {

struct Proto {
  std::string element;
  int z;
  bool aromatic;
  int capacity;
};

Proto make(const std::string &el, bool aromatic = false) {
  static const std::map<std::string, std::pair<int, int>> table{
      {"C", {6, 4}}, {"N", {7, 3}}, {"O", {8, 2}}, {"S", {16, 2}}, {"F", {9, 1}}, {"Cl", {17, 1}}, {"Br", {35, 1}}};
  auto [z, v] = table.at(el);
  return {el, z, aromatic, v};
}

class Builder {
public:
  std::vector<Proto> atoms;
  std::vector<chem::Bond> bonds;

  int add(Proto p) {
    atoms.push_back(std::move(p));
    return static_cast<int>(atoms.size()) - 1;
  }
  void bond(int a, int b, chem::BondOrder order, int cost) {
    bonds.push_back({a, b, order, false, false});
    atoms[a].capacity -= cost;
    atoms[b].capacity -= cost;
  }
  bool bonded(int a, int b) const {
    return std::any_of(bonds.begin(), bonds.end(),
                       [&](const chem::Bond &x) { return (x.a == a && x.b == b) || (x.a == b && x.b == a); });
  }
  // Six-membered aromatic ring; returns the first ring atom.
  int ring(std::mt19937_64 &rng) {
    std::bernoulli_distribution pyridine(0.3);
    int first = static_cast<int>(atoms.size());
    bool has_n = pyridine(rng);
    for (int i = 0; i < 6; ++i) {
      Proto p = (has_n && i == 3) ? make("N", true) : make("C", true);
      p.capacity = p.z == 6 ? 1 : 0;
      add(p);
    }
    for (int i = 0; i < 6; ++i) bonds.push_back({first + i, first + (i + 1) % 6, chem::BondOrder::kAromatic});
    return first;
  }
  int distance(int from, int to) const {
    std::vector<int> d(atoms.size(), -1);
    std::deque<int> q{from};
    d[from] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (const auto &b: bonds) {
        if (b.a != u && b.b != u) continue;
        int v = b.other(u);
        if (d[v] < 0) {
          d[v] = d[u] + 1;
          q.push_back(v);
        }
      }
    }
    return d[to];
  }
};

}  // namespace

chem::Molecule random_molecule(std::mt19937_64 &rng, int max_heavy) {
  if (max_heavy < 1) throw std::invalid_argument("max_heavy must be >= 1");
  std::uniform_int_distribution<int> size_dist(1, max_heavy);
  const int target = size_dist(rng);
  const std::vector<std::pair<std::string, double>> elements{{"C", 0.55}, {"N", 0.14}, {"O", 0.15}, {"S", 0.05},
                                                             {"F", 0.04}, {"Cl", 0.04}, {"Br", 0.03}};
  std::discrete_distribution<int> pick_el({0.55, 0.14, 0.15, 0.05, 0.04, 0.04, 0.03});
  std::uniform_real_distribution<double> u01(0, 1);

  Builder b;
  if (target >= 6 && u01(rng) < 0.35) b.ring(rng);
  else b.add(make("C"));

  while (static_cast<int>(b.atoms.size()) < target) {
    std::vector<int> open;
    for (int i = 0; i < static_cast<int>(b.atoms.size()); ++i)
      if (b.atoms[i].capacity > 0) open.push_back(i);
    if (open.empty()) break;
    int parent = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    if (target - static_cast<int>(b.atoms.size()) >= 6 && u01(rng) < 0.1) {
      int first = b.ring(rng);
      b.bond(parent, first, chem::BondOrder::kSingle, 1);
      continue;
    }
    Proto p = make(elements[static_cast<std::size_t>(pick_el(rng))].first);
    const int cap_parent = b.atoms[parent].capacity;
    const double r = u01(rng);
    int child = b.add(p);
    const bool can_triple = p.capacity >= 3 && cap_parent >= 3 && (p.z == 6 || p.z == 7) && b.atoms[parent].z == 6;
    if (can_triple && r < 0.08) b.bond(parent, child, chem::BondOrder::kTriple, 3);
    else if (p.capacity >= 2 && cap_parent >= 2 && !b.atoms[parent].aromatic && r < 0.3)
      b.bond(parent, child, chem::BondOrder::kDouble, 2);
    else b.bond(parent, child, chem::BondOrder::kSingle, 1);
  }

  // Occasional aliphatic ring closures.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (u01(rng) > 0.3) continue;
    std::vector<int> open;
    for (int i = 0; i < static_cast<int>(b.atoms.size()); ++i)
      if (b.atoms[i].capacity > 0 && !b.atoms[i].aromatic) open.push_back(i);
    if (open.size() < 2) break;
    std::shuffle(open.begin(), open.end(), rng);
    for (std::size_t i = 0; i + 1 < open.size(); ++i) {
      int x = open[i], y = open[i + 1];
      if (!b.bonded(x, y) && b.distance(x, y) >= 2) {
        b.bond(x, y, chem::BondOrder::kSingle, 1);
        break;
      }
    }
  }

  std::vector<chem::Atom> atoms;
  for (const auto &p: b.atoms) {
    chem::Atom a;
    a.element = p.element;
    a.atomic_number = p.z;
    a.aromatic = p.aromatic;
    atoms.push_back(a);
  }
  return chem::Molecule::from_graph(std::move(atoms), b.bonds, "");
}

std::vector<bool> brute_force_ring_bonds(const chem::Molecule &mol) {
  std::vector<bool> out(mol.bond_count());
  for (std::size_t skip = 0; skip < mol.bond_count(); ++skip) {
    const auto &sb = mol.bonds()[skip];
    std::vector<bool> seen(mol.atom_count());
    std::vector<int> stack{sb.a};
    seen[sb.a] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (std::size_t i = 0; i < mol.bond_count(); ++i) {
        if (i == skip) continue;
        const auto &bd = mol.bonds()[i];
        if (bd.a != u && bd.b != u) continue;
        int v = bd.other(u);
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    out[skip] = seen[sb.b];
  }
  return out;
}

namespace {

int total_h(const chem::Molecule &mol, int atom) {
  int h = mol.atoms()[atom].explicit_h + mol.atoms()[atom].implicit_h;
  for (const auto &bd: mol.bonds())
    if ((bd.a == atom || bd.b == atom) && mol.atoms()[bd.other(atom)].atomic_number == 1) ++h;
  return h;
}

int heavy_degree(const chem::Molecule &mol, int atom) {
  int d = 0;
  for (const auto &bd: mol.bonds())
    if ((bd.a == atom || bd.b == atom) && mol.atoms()[bd.other(atom)].atomic_number != 1) ++d;
  return d;
}

bool primitive_holds(const featurize::AtomPrimitive &p, const chem::Molecule &mol, int atom,
                     const std::vector<bool> &ring_atom) {
  using K = featurize::AtomPrimitive::Kind;
  const auto &a = mol.atoms()[atom];
  bool r = false;
  switch (p.kind) {
  case K::kAny: r = true; break;
  case K::kAromatic: r = a.aromatic; break;
  case K::kAliphatic: r = !a.aromatic; break;
  case K::kAtomicNumber: r = a.atomic_number == p.value && (!p.aromatic || *p.aromatic == a.aromatic); break;
  case K::kRing: r = p.value == 0 ? !ring_atom[atom] : ring_atom[atom]; break;
  case K::kCharge: r = a.formal_charge == p.value; break;
  case K::kHCount: r = total_h(mol, atom) == p.value; break;
  case K::kDegree: r = heavy_degree(mol, atom) == p.value; break;
  case K::kConnectivity: r = heavy_degree(mol, atom) + total_h(mol, atom) == p.value; break;
  }
  return p.negate ? !r : r;
}

bool atom_holds(const featurize::AtomQuery &q, const chem::Molecule &mol, int atom,
                const std::vector<bool> &ring_atom) {
  for (const auto &conj: q.alternatives) {
    bool all = true;
    for (const auto &p: conj) all = all && primitive_holds(p, mol, atom, ring_atom);
    if (all) return true;
  }
  return false;
}

bool bond_holds(const featurize::BondQuery &q, const chem::Bond &b, bool in_ring) {
  using O = featurize::BondQuery::Order;
  using chem::BondOrder;
  if (q.ring && *q.ring != in_ring) return false;
  switch (q.order) {
  case O::kDefault: return b.order == BondOrder::kSingle || b.order == BondOrder::kAromatic;
  case O::kAny: return true;
  case O::kSingle: return b.order == BondOrder::kSingle;
  case O::kDouble: return b.order == BondOrder::kDouble;
  case O::kTriple: return b.order == BondOrder::kTriple;
  case O::kAromatic: return b.order == BondOrder::kAromatic;
  }
  return false;
}

}  // namespace

std::set<std::vector<int>> brute_force_matches(const featurize::Pattern &p, const chem::Molecule &mol) {
  const auto ring_bond = brute_force_ring_bonds(mol);
  std::vector<bool> ring_atom(mol.atom_count());
  for (std::size_t i = 0; i < mol.bond_count(); ++i)
    if (ring_bond[i]) ring_atom[mol.bonds()[i].a] = ring_atom[mol.bonds()[i].b] = true;

  const int n = static_cast<int>(p.atom_count());
  const int m = static_cast<int>(mol.atom_count());
  std::set<std::vector<int>> found;
  std::vector<int> assign(n, -1);
  std::vector<bool> used(m);

  auto consistent = [&](int k) {
    for (const auto &pb: p.bonds()) {
      int other;
      if (pb.a == k) other = pb.b;
      else if (pb.b == k) other = pb.a;
      else continue;
      if (other > k) continue;  // checked once both ends are assigned
      int bi = -1;
      for (std::size_t i = 0; i < mol.bond_count(); ++i) {
        const auto &bd = mol.bonds()[i];
        if ((bd.a == assign[k] && bd.b == assign[other]) || (bd.b == assign[k] && bd.a == assign[other])) {
          bi = static_cast<int>(i);
          break;
        }
      }
      if (bi < 0 || !bond_holds(pb.query, mol.bonds()[bi], ring_bond[bi])) return false;
    }
    return true;
  };

  std::function<void(int)> go = [&](int k) {
    if (k == n) {
      std::vector<int> s(assign);
      std::sort(s.begin(), s.end());
      found.insert(std::move(s));
      return;
    }
    for (int a = 0; a < m; ++a) {
      if (used[a] || !atom_holds(p.atoms()[k], mol, a, ring_atom)) continue;
      assign[k] = a;
      used[a] = true;
      if (consistent(k)) go(k + 1);
      used[a] = false;
    }
    assign[k] = -1;
  };
  if (n > 0) go(0);
  return found;
}

std::vector<double> brute_force_pattern_vector(const featurize::PatternSet &set, const chem::Molecule &mol) {
  std::vector<double> out(set.arity, 0.0);
  for (const auto &e: set.entries) {
    double c = static_cast<double>(brute_force_matches(e.pattern, mol).size());
    out[e.index] = set.binary ? (c > 0 ? 1.0 : 0.0) : c;
  }
  return out;
}

std::size_t brute_force_environment_count(const chem::Molecule &mol, int radius) {
  const int n = static_cast<int>(mol.atom_count());
  // all-pairs hop distances over the heavy-atom graph the fingerprint uses
  std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    d[s][s] = 0;
    std::deque<int> q{s};
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (const auto &bd: mol.bonds()) {
        if (bd.a != u && bd.b != u) continue;
        int v = bd.other(u);
        if (d[s][v] < 0) {
          d[s][v] = d[s][u] + 1;
          q.push_back(v);
        }
      }
    }
  }
  std::size_t total = 0;
  for (int r = 0; r <= radius; ++r) {
    std::set<std::vector<int>> seen;
    for (int c = 0; c < n; ++c) {
      if (mol.atoms()[c].atomic_number == 1) continue;
      std::vector<int> inner, outer;
      for (int v = 0; v < n; ++v) {
        if (d[c][v] >= 0 && d[c][v] <= r) outer.push_back(v);
        if (r > 0 && d[c][v] >= 0 && d[c][v] <= r - 1) inner.push_back(v);
      }
      if (r > 0 && inner.size() == outer.size()) continue;
      seen.insert(outer);
    }
    total += seen.size();
  }
  return total;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double> &)> &f,
                                     std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

const std::vector<std::string> &synthetic_rules() {
  static const std::vector<std::string> rules{"[OX2H]", "[#6]=O", "c1ccccc1", "[N!H0]", "Cl", "F",
                                              "[#16]",  "C=C",    "[CR]",     "n",      "Br", "[#7]~[#6]=O"};
  return rules;
}

SyntheticSplit synthetic_dataset(std::size_t n, double train_fraction, double flip, double missing,
                                 std::uint64_t seed) {
  std::vector<featurize::Pattern> rules;
  for (const auto &r: synthetic_rules()) rules.push_back(featurize::Pattern::compile(r));
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::mt19937_64 rng(seed + attempt * 7919);
    std::bernoulli_distribution flip_d(flip), miss_d(missing);
    const std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    SyntheticSplit out;
    std::set<std::string> seen;
    std::size_t made = 0;
    while (made < n) {
      auto mol = random_molecule(rng, 16);
      auto smiles = chem::write_smiles(mol).text;
      if (!seen.insert(smiles).second) continue;
      dataset::LabelRow row;
      for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
        bool active = featurize::count_matches(rules[e], mol) > 0;
        if (made < n_train && flip_d(rng)) active = !active;
        if (miss_d(rng)) continue;
        row[e] = active ? 1 : 0;
      }
      char id[32];
      std::snprintf(id, sizeof id, "mol%05zu", made);
      (made < n_train ? out.train : out.test).add_row(id, smiles, row);
      ++made;
    }
    bool ok = true;
    for (const auto *split: {&out.train, &out.test})
      for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
        auto c = dataset::endpoint_class_counts(*split, e);
        ok = ok && c.n_pos > 0 && c.n_neg > 0;
      }
    if (ok) return out;
  }
}

}  // namespace toxbench::oracles
