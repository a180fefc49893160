// SPDX-License-Identifier: Apache-2.0

#include "toxbench/featurize/descriptors.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "featurize/embedded_data.h"
#include "toxbench/chem/element.h"
#include "toxbench/featurize/pattern.h"
#include "toxbench/util/hash.h"

namespace toxbench::featurize {

namespace {

using chem::BondOrder;
using chem::Molecule;

// Floating-point sums whose result does not depend on term order.
class OrderedSum {
public:
  void add(double v) { terms_.push_back(v); }
  double total() {
    std::sort(terms_.begin(), terms_.end());
    double s = 0.0;
    for (double t: terms_) s += t;
    return s;
  }

private:
  std::vector<double> terms_;
};

double electronegativity(int z) {
  switch (z) {
  case 1: return 2.20;
  case 5: return 2.04;
  case 6: return 2.55;
  case 7: return 3.04;
  case 8: return 3.44;
  case 9: return 3.98;
  case 14: return 1.90;
  case 15: return 2.19;
  case 16: return 2.58;
  case 17: return 3.16;
  case 33: return 2.18;
  case 34: return 2.55;
  case 35: return 2.96;
  case 53: return 2.66;
  default: return 1.80;
  }
}

bool is_nonmetal(int z) {
  static const std::set<int> kNonmetals{0, 1, 2, 5, 6, 7, 8, 9, 10, 14, 15, 16, 17, 18, 33, 34, 35, 36, 52, 53, 54, 85, 86};
  return kNonmetals.count(z) > 0;
}

bool is_halogen(int z) { return z == 9 || z == 17 || z == 35 || z == 53; }

double atom_mass(const chem::Atom &a) {
  if (a.isotope > 0) return static_cast<double>(a.isotope);
  return chem::element_by_number(a.atomic_number).mass;
}

std::size_t functional_group_count(const Molecule &mol, std::string_view key) {
  static const std::map<std::string_view, std::vector<Pattern>> kGroups = [] {
    std::map<std::string_view, std::vector<std::string_view>> src{
        {"amide", {"[CX3](=O)[NX3]"}},
        {"ester", {"[CX3](=O)[OX2][#6]"}},
        {"carboxylic_acid", {"[CX3](=O)[OX2H1]"}},
        {"hydroxyl", {"[OX2H]"}},
        {"primary_amine", {"[NX3&H2][#6]"}},
        {"secondary_amine", {"[NX3&H1]([#6])[#6]"}},
        {"tertiary_amine", {"[NX3&H0]([#6])([#6])[#6]"}},
        {"ketone", {"[#6][CX3](=O)[#6]"}},
        {"aldehyde", {"[CX3H1]=O"}},
        {"ether", {"[#6][OX2][#6]"}},
        {"nitro", {"[N+](=O)[O-]", "N(=O)=O"}},
        {"nitrile", {"C#N"}},
        {"carbon_halide", {"[#6][F,Cl,Br,I]"}},
        {"sulfonamide", {"S(=O)(=O)N"}},
        {"phenol", {"[OX2H]c"}},
        {"aniline", {"[NX3]c"}},
        {"thiol", {"[SX2H]"}},
        {"alkene", {"C=C"}},
        {"alkyne", {"C#C"}},
        {"carbonyl", {"[#6]=[#8]"}},
    };
    std::map<std::string_view, std::vector<Pattern>> compiled;
    for (const auto &[name, texts]: src)
      for (auto t: texts) compiled[name].push_back(Pattern::compile(t));
    return compiled;
  }();
  std::size_t total = 0;
  for (const auto &p: kGroups.at(key)) total += count_matches(p, mol);
  return total;
}

// Lazily computed graph facts shared by the descriptor functions.
class Context {
public:
  explicit Context(const Molecule &m): mol(m) {
    for (std::size_t i = 0; i < m.atom_count(); ++i)
      if (!m.atoms()[i].is_hydrogen()) heavy.push_back(static_cast<int>(i));
  }

  const Molecule &mol;
  std::vector<int> heavy;

  double heavy_count() const { return static_cast<double>(heavy.size()); }

  int count_atoms(const std::function<bool(int)> &pred) const {
    int n = 0;
    for (int i: heavy)
      if (pred(i)) ++n;
    return n;
  }

  int count_bonds(const std::function<bool(const chem::Bond &)> &pred) const {
    int n = 0;
    for (const auto &b: mol.bonds())
      if (pred(b)) ++n;
    return n;
  }

  bool is_heavy_bond(const chem::Bond &b) const {
    return !mol.atoms()[b.a].is_hydrogen() && !mol.atoms()[b.b].is_hydrogen();
  }

  double hydrogen_total() const {
    double h = 0;
    for (std::size_t i = 0; i < mol.atom_count(); ++i) {
      const auto &a = mol.atoms()[i];
      if (a.is_hydrogen()) h += 1 + a.explicit_h;
      else h += a.explicit_h + a.implicit_h;
    }
    return h;
  }

  // Topological distances between heavy atoms; -1 when unreachable.
  const std::vector<std::vector<int>> &distances() {
    if (dist_) return *dist_;
    const std::size_t n = mol.atom_count();
    std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
    for (int s: heavy) {
      std::vector<int> queue{s};
      d[s][s] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        int x = queue[head];
        for (const auto &nb: mol.neighbors(x)) {
          if (mol.atoms()[nb.atom].is_hydrogen() || d[s][nb.atom] >= 0) continue;
          d[s][nb.atom] = d[s][x] + 1;
          queue.push_back(nb.atom);
        }
      }
    }
    dist_ = std::move(d);
    return *dist_;
  }

  const std::vector<std::vector<int>> &rings() {
    if (!rings_) rings_ = perceive_rings(mol);
    return *rings_;
  }

  // Number of simple paths with `length` bonds in the heavy-atom graph.
  double path_count(int length) {
    if (length < 1) return 0;
    std::size_t total = 0;
    std::vector<bool> on_path(mol.atom_count(), false);
    std::function<void(int, int)> walk = [&](int x, int remaining) {
      if (remaining == 0) {
        ++total;
        return;
      }
      on_path[x] = true;
      for (const auto &nb: mol.neighbors(x))
        if (!on_path[nb.atom] && !mol.atoms()[nb.atom].is_hydrogen()) walk(nb.atom, remaining - 1);
      on_path[x] = false;
    };
    for (int s: heavy) walk(s, length);
    return static_cast<double>(total / 2);
  }

  double cyclomatic() const {
    double heavy_bonds = 0;
    for (const auto &b: mol.bonds())
      if (is_heavy_bond(b)) heavy_bonds += 1;
    return heavy_bonds - heavy_count() + heavy_components();
  }

  double heavy_components() const {
    std::vector<int> label(mol.atom_count(), -1);
    int comps = 0;
    for (int s: heavy) {
      if (label[s] >= 0) continue;
      ++comps;
      std::vector<int> stack{s};
      label[s] = comps;
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (const auto &nb: mol.neighbors(x))
          if (label[nb.atom] < 0 && !mol.atoms()[nb.atom].is_hydrogen()) {
            label[nb.atom] = comps;
            stack.push_back(nb.atom);
          }
      }
    }
    return comps;
  }

  std::vector<int> component_sizes() const {
    auto labels = mol.component_labels();
    std::map<int, int> sizes;
    for (int i: heavy) ++sizes[labels[i]];
    std::vector<int> out;
    for (auto [k, v]: sizes) out.push_back(v);
    return out;
  }

  // Connected components of the ring-bond subgraph, as atom counts.
  std::vector<int> ring_systems() const {
    std::vector<int> label(mol.atom_count(), -1);
    std::vector<int> sizes;
    for (std::size_t s = 0; s < mol.atom_count(); ++s) {
      if (!mol.atoms()[s].in_ring || label[s] >= 0) continue;
      int id = static_cast<int>(sizes.size());
      sizes.push_back(0);
      std::vector<int> stack{static_cast<int>(s)};
      label[s] = id;
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        ++sizes[id];
        for (const auto &nb: mol.neighbors(x))
          if (mol.bonds()[nb.bond].in_ring && label[nb.atom] < 0) {
            label[nb.atom] = id;
            stack.push_back(nb.atom);
          }
      }
    }
    return sizes;
  }

  int heavy_degree(int i) const { return mol.atoms()[i].degree; }

  bool has_bond_order(int atom, BondOrder order) const {
    for (const auto &nb: mol.neighbors(atom))
      if (mol.bonds()[nb.bond].order == order) return true;
    return false;
  }

  int count_bond_order(int atom, BondOrder order) const {
    int n = 0;
    for (const auto &nb: mol.neighbors(atom))
      if (mol.bonds()[nb.bond].order == order) ++n;
    return n;
  }

  bool bonded_to_carbonyl_carbon(int atom) const {
    for (const auto &nb: mol.neighbors(atom)) {
      if (mol.atoms()[nb.atom].atomic_number != 6) continue;
      for (const auto &nb2: mol.neighbors(nb.atom))
        if (mol.bonds()[nb2.bond].order == BondOrder::kDouble && mol.atoms()[nb2.atom].atomic_number == 8)
          return true;
    }
    return false;
  }

  double ring_count_where(const std::function<bool(const std::vector<int> &)> &pred) {
    double n = 0;
    for (const auto &r: rings())
      if (pred(r)) n += 1;
    return n;
  }

private:
  std::optional<std::vector<std::vector<int>>> dist_;
  std::optional<std::vector<std::vector<int>>> rings_;
};

using DescriptorFn = std::function<double(Context &)>;

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

int z_of(const Context &c, int i) { return c.mol.atoms()[i].atomic_number; }

const std::map<std::string, DescriptorFn, std::less<>> &descriptor_table() {
  static const std::map<std::string, DescriptorFn, std::less<>> table = [] {
    std::map<std::string, DescriptorFn, std::less<>> t;
    auto element_count = [](int z) {
      return [z](Context &c) { return static_cast<double>(c.count_atoms([&](int i) { return z_of(c, i) == z; })); };
    };
    auto group = [](std::string_view key) {
      return [key](Context &c) { return static_cast<double>(functional_group_count(c.mol, key)); };
    };
    auto ring_size = [](std::size_t size) {
      return [size](Context &c) { return c.ring_count_where([&](const auto &r) { return r.size() == size; }); };
    };

    t["heavy_atom_count"] = [](Context &c) { return c.heavy_count(); };
    t["total_atom_count"] = [](Context &c) {
      double explicit_h_atoms = static_cast<double>(c.mol.atom_count() - c.heavy.size());
      return c.heavy_count() + c.hydrogen_total() - explicit_h_atoms + explicit_h_atoms;
    };
    t["hydrogen_count"] = [](Context &c) { return c.hydrogen_total(); };
    t["mol_weight"] = [](Context &c) { return molecular_weight(c.mol); };
    t["heavy_atom_mol_weight"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy) s.add(atom_mass(c.mol.atoms()[i]));
      return s.total();
    };
    t["average_atom_mass"] = [](Context &c) {
      return safe_div(molecular_weight(c.mol), c.heavy_count() + c.hydrogen_total() -
                                                   static_cast<double>(c.mol.atom_count() - c.heavy.size()));
    };
    t["bond_count"] = [](Context &c) { return static_cast<double>(c.mol.bond_count()); };
    t["ring_count"] = [](Context &c) { return c.cyclomatic(); };
    t["aromatic_atom_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return c.mol.atoms()[i].aromatic; }));
    };
    t["fraction_aromatic_atoms"] = [](Context &c) {
      return safe_div(c.count_atoms([&](int i) { return c.mol.atoms()[i].aromatic; }), c.heavy_count());
    };
    t["aromatic_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([](const chem::Bond &b) { return b.order == BondOrder::kAromatic; }));
    };
    t["ring_atom_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return c.mol.atoms()[i].in_ring; }));
    };
    t["ring_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([](const chem::Bond &b) { return b.in_ring; }));
    };
    t["fraction_ring_atoms"] = [](Context &c) {
      return safe_div(c.count_atoms([&](int i) { return c.mol.atoms()[i].in_ring; }), c.heavy_count());
    };
    t["rotatable_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([&](const chem::Bond &b) {
        return b.order == BondOrder::kSingle && !b.in_ring && c.is_heavy_bond(b) && c.heavy_degree(b.a) > 1 &&
               c.heavy_degree(b.b) > 1 && !c.has_bond_order(b.a, BondOrder::kTriple) &&
               !c.has_bond_order(b.b, BondOrder::kTriple);
      }));
    };
    t["hbond_donor_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        int z = z_of(c, i);
        return (z == 7 || z == 8) && c.mol.total_h(i) > 0;
      }));
    };
    t["hbond_acceptor_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        const auto &a = c.mol.atoms()[i];
        if (a.formal_charge > 0) return false;
        if (a.atomic_number == 8) return true;
        if (a.atomic_number != 7) return false;
        if (a.aromatic && c.mol.total_h(i) > 0) return false;
        return !c.bonded_to_carbonyl_carbon(i);
      }));
    };
    t["heteroatom_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return z_of(c, i) != 6; }));
    };
    t["formal_charge_sum"] = [](Context &c) {
      double q = 0;
      for (const auto &a: c.mol.atoms()) q += a.formal_charge;
      return q;
    };
    t["positive_atom_count"] = [](Context &c) {
      return static_cast<double>(std::count_if(c.mol.atoms().begin(), c.mol.atoms().end(),
                                               [](const chem::Atom &a) { return a.formal_charge > 0; }));
    };
    t["negative_atom_count"] = [](Context &c) {
      return static_cast<double>(std::count_if(c.mol.atoms().begin(), c.mol.atoms().end(),
                                               [](const chem::Atom &a) { return a.formal_charge < 0; }));
    };
    t["component_count"] = [](Context &c) { return static_cast<double>(c.mol.component_count()); };
    t["largest_component_heavy_atoms"] = [](Context &c) {
      auto sizes = c.component_sizes();
      return sizes.empty() ? 0.0 : static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
    };
    t["single_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([](const chem::Bond &b) { return b.order == BondOrder::kSingle; }));
    };
    t["double_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([](const chem::Bond &b) { return b.order == BondOrder::kDouble; }));
    };
    t["triple_bond_count"] = [](Context &c) {
      return static_cast<double>(c.count_bonds([](const chem::Bond &b) { return b.order == BondOrder::kTriple; }));
    };
    t["carbon_count"] = element_count(6);
    t["nitrogen_count"] = element_count(7);
    t["oxygen_count"] = element_count(8);
    t["sulfur_count"] = element_count(16);
    t["phosphorus_count"] = element_count(15);
    t["fluorine_count"] = element_count(9);
    t["chlorine_count"] = element_count(17);
    t["bromine_count"] = element_count(35);
    t["iodine_count"] = element_count(53);
    t["boron_count"] = element_count(5);
    t["silicon_count"] = element_count(14);
    t["selenium_count"] = element_count(34);
    t["halogen_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return is_halogen(z_of(c, i)); }));
    };
    t["metal_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return !is_nonmetal(z_of(c, i)); }));
    };
    t["fraction_csp3"] = [](Context &c) {
      int carbons = c.count_atoms([&](int i) { return z_of(c, i) == 6; });
      int sp3 = c.count_atoms([&](int i) {
        if (z_of(c, i) != 6 || c.mol.atoms()[i].aromatic) return false;
        for (const auto &nb: c.mol.neighbors(i))
          if (c.mol.bonds()[nb.bond].order != BondOrder::kSingle) return false;
        return true;
      });
      return safe_div(sp3, carbons);
    };
    t["sp2_carbon_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        return z_of(c, i) == 6 && (c.mol.atoms()[i].aromatic || (c.count_bond_order(i, BondOrder::kDouble) == 1 &&
                                                                 !c.has_bond_order(i, BondOrder::kTriple)));
      }));
    };
    t["sp_carbon_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        return z_of(c, i) == 6 &&
               (c.has_bond_order(i, BondOrder::kTriple) || c.count_bond_order(i, BondOrder::kDouble) >= 2);
      }));
    };
    t["heteroatom_fraction"] = [](Context &c) {
      return safe_div(c.count_atoms([&](int i) { return z_of(c, i) != 6; }), c.heavy_count());
    };
    t["ring_count_3"] = ring_size(3);
    t["ring_count_4"] = ring_size(4);
    t["ring_count_5"] = ring_size(5);
    t["ring_count_6"] = ring_size(6);
    t["ring_count_7"] = ring_size(7);
    t["ring_count_8"] = ring_size(8);
    t["ring_count_large"] = [](Context &c) { return c.ring_count_where([](const auto &r) { return r.size() > 8; }); };
    t["aromatic_ring_count"] = [](Context &c) {
      return c.ring_count_where([&](const auto &r) {
        return std::all_of(r.begin(), r.end(), [&](int i) { return c.mol.atoms()[i].aromatic; });
      });
    };
    t["aliphatic_ring_count"] = [](Context &c) {
      return c.ring_count_where([&](const auto &r) {
        return !std::all_of(r.begin(), r.end(), [&](int i) { return c.mol.atoms()[i].aromatic; });
      });
    };
    t["heterocycle_count"] = [](Context &c) {
      return c.ring_count_where(
          [&](const auto &r) { return std::any_of(r.begin(), r.end(), [&](int i) { return z_of(c, i) != 6; }); });
    };
    t["aromatic_heterocycle_count"] = [](Context &c) {
      return c.ring_count_where([&](const auto &r) {
        return std::all_of(r.begin(), r.end(), [&](int i) { return c.mol.atoms()[i].aromatic; }) &&
               std::any_of(r.begin(), r.end(), [&](int i) { return z_of(c, i) != 6; });
      });
    };
    t["saturated_ring_count"] = [](Context &c) {
      return c.ring_count_where([&](const auto &r) {
        for (std::size_t k = 0; k < r.size(); ++k)
          for (std::size_t l = k + 1; l < r.size(); ++l) {
            int b = c.mol.find_bond(r[k], r[l]);
            if (b >= 0 && c.mol.bonds()[b].order != BondOrder::kSingle) return false;
          }
        return true;
      });
    };
    t["largest_ring_size"] = [](Context &c) {
      std::size_t m = 0;
      for (const auto &r: c.rings()) m = std::max(m, r.size());
      return static_cast<double>(m);
    };
    t["smallest_ring_size"] = [](Context &c) {
      std::size_t m = 0;
      for (const auto &r: c.rings()) m = m == 0 ? r.size() : std::min(m, r.size());
      return static_cast<double>(m);
    };
    t["wiener_index"] = [](Context &c) {
      const auto &d = c.distances();
      double w = 0;
      for (std::size_t x = 0; x < c.heavy.size(); ++x)
        for (std::size_t y = x + 1; y < c.heavy.size(); ++y)
          if (d[c.heavy[x]][c.heavy[y]] > 0) w += d[c.heavy[x]][c.heavy[y]];
      return w;
    };
    t["mean_topological_distance"] = [](Context &c) {
      const auto &d = c.distances();
      double w = 0, pairs = 0;
      for (std::size_t x = 0; x < c.heavy.size(); ++x)
        for (std::size_t y = x + 1; y < c.heavy.size(); ++y)
          if (d[c.heavy[x]][c.heavy[y]] > 0) {
            w += d[c.heavy[x]][c.heavy[y]];
            pairs += 1;
          }
      return safe_div(w, pairs);
    };
    t["graph_diameter"] = [](Context &c) {
      const auto &d = c.distances();
      int m = 0;
      for (int x: c.heavy)
        for (int y: c.heavy) m = std::max(m, d[x][y]);
      return static_cast<double>(m);
    };
    t["graph_radius"] = [](Context &c) {
      const auto &d = c.distances();
      int best = -1;
      for (int x: c.heavy) {
        int ecc = 0;
        for (int y: c.heavy) ecc = std::max(ecc, d[x][y]);
        best = best < 0 ? ecc : std::min(best, ecc);
      }
      return static_cast<double>(std::max(best, 0));
    };
    t["zagreb_m1"] = [](Context &c) {
      double s = 0;
      for (int i: c.heavy) s += c.heavy_degree(i) * c.heavy_degree(i);
      return s;
    };
    t["zagreb_m2"] = [](Context &c) {
      double s = 0;
      for (const auto &b: c.mol.bonds())
        if (c.is_heavy_bond(b)) s += c.heavy_degree(b.a) * c.heavy_degree(b.b);
      return s;
    };
    t["randic_index"] = [](Context &c) {
      OrderedSum s;
      for (const auto &b: c.mol.bonds())
        if (c.is_heavy_bond(b)) s.add(1.0 / std::sqrt(static_cast<double>(c.heavy_degree(b.a) * c.heavy_degree(b.b))));
      return s.total();
    };
    t["chi0"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy)
        if (c.heavy_degree(i) > 0) s.add(1.0 / std::sqrt(static_cast<double>(c.heavy_degree(i))));
      return s.total();
    };
    t["balaban_j"] = [](Context &c) {
      const auto &d = c.distances();
      std::vector<double> dist_sum(c.mol.atom_count(), 0.0);
      for (int x: c.heavy)
        for (int y: c.heavy)
          if (d[x][y] > 0) dist_sum[x] += d[x][y];
      OrderedSum s;
      double edges = 0;
      for (const auto &b: c.mol.bonds()) {
        if (!c.is_heavy_bond(b)) continue;
        edges += 1;
        if (dist_sum[b.a] > 0 && dist_sum[b.b] > 0) s.add(1.0 / std::sqrt(dist_sum[b.a] * dist_sum[b.b]));
      }
      double mu = c.cyclomatic();
      return edges == 0 ? 0.0 : edges / (mu + 1.0) * s.total();
    };
    t["kappa1"] = [](Context &c) {
      double n = c.heavy_count(), p1 = c.path_count(1);
      return p1 == 0 ? 0.0 : n * (n - 1) * (n - 1) / (p1 * p1);
    };
    t["kappa2"] = [](Context &c) {
      double n = c.heavy_count(), p2 = c.path_count(2);
      return p2 == 0 ? 0.0 : (n - 1) * (n - 2) * (n - 2) / (p2 * p2);
    };
    t["kappa3"] = [](Context &c) {
      double n = c.heavy_count(), p3 = c.path_count(3);
      if (p3 == 0) return 0.0;
      long long ni = static_cast<long long>(n);
      return ni % 2 == 1 ? (n - 1) * (n - 3) * (n - 3) / (p3 * p3) : (n - 3) * (n - 2) * (n - 2) / (p3 * p3);
    };
    t["path_count_2"] = [](Context &c) { return c.path_count(2); };
    t["path_count_3"] = [](Context &c) { return c.path_count(3); };
    t["path_count_4"] = [](Context &c) { return c.path_count(4); };
    t["harary_index"] = [](Context &c) {
      const auto &d = c.distances();
      OrderedSum s;
      for (std::size_t x = 0; x < c.heavy.size(); ++x)
        for (std::size_t y = x + 1; y < c.heavy.size(); ++y)
          if (d[c.heavy[x]][c.heavy[y]] > 0) s.add(1.0 / d[c.heavy[x]][c.heavy[y]]);
      return s.total();
    };
    t["platt_number"] = [](Context &c) {
      double s = 0;
      for (const auto &b: c.mol.bonds())
        if (c.is_heavy_bond(b)) s += c.heavy_degree(b.a) + c.heavy_degree(b.b) - 2;
      return s;
    };
    t["max_degree"] = [](Context &c) {
      int m = 0;
      for (int i: c.heavy) m = std::max(m, c.heavy_degree(i));
      return static_cast<double>(m);
    };
    t["mean_degree"] = [](Context &c) {
      double s = 0;
      for (int i: c.heavy) s += c.heavy_degree(i);
      return safe_div(s, c.heavy_count());
    };
    for (int deg = 1; deg <= 4; ++deg) {
      t["degree" + std::to_string(deg) + "_count"] = [deg](Context &c) {
        return static_cast<double>(c.count_atoms([&](int i) { return c.heavy_degree(i) == deg; }));
      };
    }
    t["polar_surface_proxy"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy) {
        int z = z_of(c, i);
        double h = c.mol.total_h(i);
        if (z == 7) s.add(12.03 + 11.0 * h);
        else if (z == 8) s.add((c.has_bond_order(i, BondOrder::kDouble) ? 17.07 : 9.23) + 11.0 * h);
      }
      return s.total();
    };
    t["polar_atom_fraction"] = [](Context &c) {
      return safe_div(c.count_atoms([&](int i) { return z_of(c, i) == 7 || z_of(c, i) == 8; }), c.heavy_count());
    };
    t["hydrophobic_carbon_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        if (z_of(c, i) != 6) return false;
        for (const auto &nb: c.mol.neighbors(i)) {
          int z = c.mol.atoms()[nb.atom].atomic_number;
          if (z != 6 && z != 1) return false;
        }
        return true;
      }));
    };
    t["electronegativity_sum"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy) s.add(electronegativity(z_of(c, i)));
      return s.total();
    };
    t["electronegativity_mean"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy) s.add(electronegativity(z_of(c, i)));
      return safe_div(s.total(), c.heavy_count());
    };
    t["carbon_mass_fraction"] = [](Context &c) {
      double carbons = c.count_atoms([&](int i) { return z_of(c, i) == 6; });
      return safe_div(carbons * chem::element_by_number(6).mass, molecular_weight(c.mol));
    };
    t["heteroatom_mass_fraction"] = [](Context &c) {
      OrderedSum s;
      for (int i: c.heavy)
        if (z_of(c, i) != 6) s.add(atom_mass(c.mol.atoms()[i]));
      return safe_div(s.total(), molecular_weight(c.mol));
    };
    t["bond_order_sum"] = [](Context &c) {
      double s = 0;
      for (const auto &b: c.mol.bonds())
        s += b.order == BondOrder::kAromatic ? 1.5 : static_cast<double>(chem::valence_contribution(b.order));
      return s;
    };
    t["unsaturation_sum"] = [](Context &c) {
      double s = 0;
      for (const auto &b: c.mol.bonds())
        s += b.order == BondOrder::kAromatic ? 0.5 : static_cast<double>(chem::valence_contribution(b.order) - 1);
      return s;
    };
    t["double_bond_equivalents"] = [](Context &c) {
      double carbon_like = c.count_atoms([&](int i) { return z_of(c, i) == 6 || z_of(c, i) == 14; });
      double nitrogen_like = c.count_atoms([&](int i) { return z_of(c, i) == 7 || z_of(c, i) == 15; });
      double halogens = c.count_atoms([&](int i) { return is_halogen(z_of(c, i)); });
      return carbon_like - (c.hydrogen_total() + halogens) / 2.0 + nitrogen_like / 2.0 + 1.0;
    };
    for (std::string_view g: {"amide", "ester", "carboxylic_acid", "hydroxyl", "primary_amine", "secondary_amine",
                              "tertiary_amine", "ketone", "aldehyde", "ether", "nitro", "nitrile", "carbon_halide",
                              "sulfonamide", "phenol", "aniline", "thiol", "alkene", "alkyne", "carbonyl"})
      t[std::string(g) + "_count"] = group(g);
    auto aromatic_element = [](int z) {
      return [z](Context &c) {
        return static_cast<double>(c.count_atoms([&](int i) { return z_of(c, i) == z && c.mol.atoms()[i].aromatic; }));
      };
    };
    t["aromatic_nitrogen_count"] = aromatic_element(7);
    t["aromatic_oxygen_count"] = aromatic_element(8);
    t["aromatic_sulfur_count"] = aromatic_element(16);
    auto ring_element = [](int z) {
      return [z](Context &c) {
        return static_cast<double>(c.count_atoms([&](int i) { return z_of(c, i) == z && c.mol.atoms()[i].in_ring; }));
      };
    };
    t["ring_nitrogen_count"] = ring_element(7);
    t["ring_oxygen_count"] = ring_element(8);
    t["ring_fusion_atom_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) {
        int ring_bonds = 0;
        for (const auto &nb: c.mol.neighbors(i))
          if (c.mol.bonds()[nb.bond].in_ring) ++ring_bonds;
        return ring_bonds >= 3;
      }));
    };
    t["ring_system_count"] = [](Context &c) { return static_cast<double>(c.ring_systems().size()); };
    t["largest_ring_system_size"] = [](Context &c) {
      auto s = c.ring_systems();
      return s.empty() ? 0.0 : static_cast<double>(*std::max_element(s.begin(), s.end()));
    };
    t["chain_atom_count"] = [](Context &c) {
      return static_cast<double>(c.count_atoms([&](int i) { return !c.mol.atoms()[i].in_ring; }));
    };
    t["acyclic_diameter"] = [](Context &c) {
      int best = 0;
      for (int s: c.heavy) {
        if (c.mol.atoms()[s].in_ring) continue;
        std::vector<int> dist(c.mol.atom_count(), -1);
        std::vector<int> queue{s};
        dist[s] = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
          int x = queue[head];
          best = std::max(best, dist[x]);
          for (const auto &nb: c.mol.neighbors(x)) {
            const auto &a = c.mol.atoms()[nb.atom];
            if (a.in_ring || a.is_hydrogen() || dist[nb.atom] >= 0) continue;
            dist[nb.atom] = dist[x] + 1;
            queue.push_back(nb.atom);
          }
        }
      }
      return static_cast<double>(best);
    };
    t["terminal_methyl_count"] = [](Context &c) {
      return static_cast<double>(
          c.count_atoms([&](int i) { return z_of(c, i) == 6 && c.heavy_degree(i) == 1 && c.mol.total_h(i) == 3; }));
    };
    t["isotope_atom_count"] = [](Context &c) {
      return static_cast<double>(std::count_if(c.mol.atoms().begin(), c.mol.atoms().end(),
                                               [](const chem::Atom &a) { return a.isotope > 0; }));
    };
    t["explicit_hydrogen_atom_count"] = [](Context &c) {
      return static_cast<double>(c.mol.atom_count() - c.heavy.size());
    };
    t["mean_ring_size"] = [](Context &c) {
      double s = 0;
      for (const auto &r: c.rings()) s += static_cast<double>(r.size());
      return safe_div(s, static_cast<double>(c.rings().size()));
    };
    t["ring_heteroatom_fraction"] = [](Context &c) {
      double ring_atoms = c.count_atoms([&](int i) { return c.mol.atoms()[i].in_ring; });
      double ring_hetero = c.count_atoms([&](int i) { return c.mol.atoms()[i].in_ring && z_of(c, i) != 6; });
      return safe_div(ring_hetero, ring_atoms);
    };
    return t;
  }();
  return table;
}

bool is_reserved(std::string_view name) { return name.rfind("reserved_", 0) == 0; }

}  // namespace

double molecular_weight(const Molecule &mol) {
  OrderedSum s;
  double hydrogens = 0;
  for (const auto &a: mol.atoms()) {
    s.add(atom_mass(a));
    hydrogens += a.explicit_h + a.implicit_h;
  }
  s.add(hydrogens * chem::kHydrogenMass);
  return s.total();
}

std::vector<std::vector<int>> perceive_rings(const Molecule &mol) {
  constexpr std::size_t kMaxPathsPerBond = 256;
  std::set<std::vector<int>> rings;
  const std::size_t n = mol.atom_count();
  for (std::size_t bi = 0; bi < mol.bond_count(); ++bi) {
    const auto &bond = mol.bonds()[bi];
    if (!bond.in_ring) continue;
    // BFS from bond.a to bond.b over ring bonds, skipping this bond.
    std::vector<int> dist(n, -1);
    std::vector<std::vector<int>> preds(n);
    std::vector<int> queue{bond.a};
    dist[bond.a] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int x = queue[head];
      if (dist[bond.b] >= 0 && dist[x] >= dist[bond.b]) break;
      for (const auto &nb: mol.neighbors(x)) {
        if (nb.bond == static_cast<int>(bi) || !mol.bonds()[nb.bond].in_ring) continue;
        if (dist[nb.atom] < 0) {
          dist[nb.atom] = dist[x] + 1;
          queue.push_back(nb.atom);
        }
        if (dist[nb.atom] == dist[x] + 1) preds[nb.atom].push_back(x);
      }
    }
    if (dist[bond.b] < 0) continue;
    // Enumerate every shortest path back from bond.b.
    std::size_t emitted = 0;
    std::vector<int> path{bond.b};
    std::function<void(int)> back = [&](int x) {
      if (emitted >= kMaxPathsPerBond) return;
      if (x == bond.a) {
        std::vector<int> ring(path);
        std::sort(ring.begin(), ring.end());
        rings.insert(std::move(ring));
        ++emitted;
        return;
      }
      for (int p: preds[x]) {
        path.push_back(p);
        back(p);
        path.pop_back();
      }
    };
    back(bond.b);
  }
  return {rings.begin(), rings.end()};
}

DescriptorList DescriptorList::parse(std::string_view text) {
  DescriptorList list;
  list.content_hash = to_hex(fnv1a(text));
  std::map<std::size_t, std::string> by_index;
  const auto &table = descriptor_table();
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    auto fail = [&](const std::string &msg) {
      return std::invalid_argument("descriptor list line " + std::to_string(line_no) + ": " + msg);
    };
    if (tab == std::string_view::npos) throw fail("expected index<TAB>name");
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, index);
    if (ec != std::errc() || ptr != line.data() + tab) throw fail("bad index");
    std::string name(line.substr(tab + 1));
    if (!is_reserved(name) && table.find(name) == table.end()) throw fail("unknown descriptor '" + name + "'");
    if (!by_index.emplace(index, name).second) throw fail("duplicate index");
  }
  if (by_index.size() != kDescriptorCount || by_index.rbegin()->first != kDescriptorCount - 1)
    throw std::invalid_argument("descriptor list must define indices 0.." + std::to_string(kDescriptorCount - 1));
  std::set<std::string> unique;
  for (auto &[idx, name]: by_index) {
    if (!unique.insert(name).second) throw std::invalid_argument("descriptor '" + name + "' listed twice");
    list.names.push_back(name);
  }
  return list;
}

const DescriptorList &DescriptorList::shipped() {
  static const DescriptorList list = parse(embedded::k_descriptors_tsv);
  return list;
}

std::vector<double> descriptors(const Molecule &mol) {
  const auto &list = DescriptorList::shipped();
  const auto &table = descriptor_table();
  Context ctx(mol);
  std::vector<double> out;
  out.reserve(list.names.size());
  for (const auto &name: list.names) {
    if (is_reserved(name)) {
      out.push_back(0.0);
      continue;
    }
    double v = table.find(name)->second(ctx);
    out.push_back(std::isfinite(v) ? v : 0.0);
  }
  return out;
}

double descriptor(const Molecule &mol, std::string_view name) {
  const auto &table = descriptor_table();
  auto it = table.find(name);
  if (it == table.end()) throw std::out_of_range("unknown descriptor: " + std::string(name));
  Context ctx(mol);
  return it->second(ctx);
}

}  // namespace toxbench::featurize
