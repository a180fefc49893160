// SPDX-License-Identifier: Apache-2.0

#include "toxbench/featurize/fingerprint.h"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "toxbench/util/hash.h"

namespace toxbench::featurize {

void FingerprintConfig::validate() const {
  if (width < 1) throw std::invalid_argument("fingerprint width must be >= 1");
  if (radius < 0 || radius > 10) throw std::invalid_argument("fingerprint radius must be in [0, 10]");
}

namespace {

using AtomSet = std::vector<std::uint64_t>;  // bitset over atoms

std::uint32_t bond_code(chem::BondOrder order) { return static_cast<std::uint32_t>(order); }

}  // namespace

std::vector<Environment> circular_environments(const chem::Molecule &mol, int radius) {
  const std::size_t n = mol.atom_count();
  const std::size_t words = (n + 63) / 64;
  std::vector<Environment> out;
  if (n == 0) return out;

  std::vector<std::uint64_t> ids = chem::initial_atom_invariants(mol);
  std::vector<AtomSet> sets(n, AtomSet(words, 0));
  for (std::size_t i = 0; i < n; ++i) {
    sets[i][i / 64] |= std::uint64_t{1} << (i % 64);
    out.push_back({static_cast<int>(i), 0, ids[i]});
  }

  std::vector<std::pair<std::uint32_t, std::uint64_t>> env;
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next_ids(n);
    std::vector<AtomSet> next_sets = sets;
    for (std::size_t i = 0; i < n; ++i) {
      env.clear();
      for (const auto &nb: mol.neighbors(static_cast<int>(i))) {
        env.emplace_back(bond_code(mol.bonds()[nb.bond].order), ids[nb.atom]);
        for (std::size_t w = 0; w < words; ++w) next_sets[i][w] |= sets[nb.atom][w];
      }
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.add_u32(static_cast<std::uint32_t>(r)).add_u64(ids[i]).add_u64(env.size());
      for (const auto &[code, id]: env) h.add_u32(code).add_u64(id);
      next_ids[i] = h.digest();
    }

    // (atom set, identifier, center) for environments that grew this round.
    std::vector<std::tuple<const AtomSet *, std::uint64_t, int>> grown;
    for (std::size_t i = 0; i < n; ++i)
      if (next_sets[i] != sets[i]) grown.emplace_back(&next_sets[i], next_ids[i], static_cast<int>(i));
    std::sort(grown.begin(), grown.end(), [](const auto &x, const auto &y) {
      if (*std::get<0>(x) != *std::get<0>(y)) return *std::get<0>(x) < *std::get<0>(y);
      return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });
    for (std::size_t k = 0; k < grown.size(); ++k) {
      if (k > 0 && *std::get<0>(grown[k]) == *std::get<0>(grown[k - 1])) continue;
      out.push_back({std::get<2>(grown[k]), r, std::get<1>(grown[k])});
    }

    ids = std::move(next_ids);
    sets = std::move(next_sets);
  }

  std::sort(out.begin(), out.end(), [](const Environment &x, const Environment &y) {
    return std::tie(x.radius, x.identifier, x.center) < std::tie(y.radius, y.identifier, y.center);
  });
  return out;
}

std::vector<std::uint32_t> ecfp_counts(const chem::Molecule &mol, const FingerprintConfig &cfg) {
  cfg.validate();
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(cfg.width), 0);
  const auto width = static_cast<std::uint64_t>(cfg.width);
  for (const auto &e: circular_environments(mol, cfg.radius)) {
    auto &bucket = counts[e.identifier % width];
    bucket = cfg.counted ? bucket + 1 : 1;
  }
  return counts;
}

}  // namespace toxbench::featurize
