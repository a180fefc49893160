// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "toxbench/chem/smiles.h"
#include "toxbench/featurize/descriptors.h"
#include "toxbench/featurize/features.h"
#include "toxbench/featurize/fingerprint.h"
#include "toxbench/featurize/pattern.h"

using namespace toxbench;
using namespace toxbench::featurize;

namespace {

chem::Molecule mol(std::string_view s) { return chem::parse_smiles(s); }

std::size_t matches(std::string_view pattern, std::string_view smiles) {
  return count_matches(Pattern::compile(pattern), mol(smiles));
}

std::map<std::uint32_t, std::uint32_t> nonzero(const std::vector<std::uint32_t> &v) {
  std::map<std::uint32_t, std::uint32_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) out[static_cast<std::uint32_t>(i)] = v[i];
  return out;
}

}  // namespace

TEST(Ecfp, WritingOrderInvariant) { EXPECT_EQ(ecfp_counts(mol("CCO")), ecfp_counts(mol("OCC"))); }

TEST(Ecfp, Methane) {
  auto nz = nonzero(ecfp_counts(mol("C")));
  ASSERT_EQ(nz.size(), 1u);
  EXPECT_EQ(nz.begin()->second, 1u);
}

TEST(Ecfp, BenzeneEnvironments) {
  // Radius 3 reaches the whole ring from every atom, so the six radius-3
  // neighbourhoods coincide and survive once.
  auto envs = circular_environments(mol("c1ccccc1"), 3);
  std::map<int, std::size_t> per_radius;
  std::map<int, std::set<std::uint64_t>> ids;
  for (const auto &e: envs) {
    ++per_radius[e.radius];
    ids[e.radius].insert(e.identifier);
  }
  EXPECT_EQ(per_radius, (std::map<int, std::size_t>{{0, 6}, {1, 6}, {2, 6}, {3, 1}}));
  for (const auto &[r, s]: ids) EXPECT_EQ(s.size(), 1u) << "radius " << r;
  EXPECT_EQ(oracles::brute_force_environment_count(mol("c1ccccc1"), 3), 19u);
  auto counts = ecfp_counts(mol("c1ccccc1"));
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0u), 19u);
}

TEST(Ecfp, MassMatchesEnvironmentOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto m = oracles::random_molecule(rng, 14);
    auto counts = ecfp_counts(m);
    std::size_t mass = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    ASSERT_EQ(mass, oracles::brute_force_environment_count(m, 3)) << chem::write_smiles(m).text;
    ASSERT_GE(mass, 1u);
  }
}

TEST(Ecfp, BinaryAndConfig) {
  FingerprintConfig cfg;
  cfg.counted = false;
  auto v = ecfp_counts(mol("CCCCCC"), cfg);
  EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](auto x) { return x <= 1; }));
  cfg.width = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.width = 16;
  cfg.radius = 11;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Pattern, HandCounts) {
  EXPECT_EQ(matches("c1ccccc1", "c1ccccc1"), 1u);
  EXPECT_EQ(matches("N(=O)=O", "CCO"), 0u);
  EXPECT_EQ(matches("C=O", "CC(=O)C"), 1u);
  EXPECT_EQ(matches("C=O", "O=CC=O"), 2u);
  EXPECT_EQ(matches("[OX2H]", "OCCO"), 2u);
  EXPECT_EQ(matches("[#6]~[#6]", "CC=CC"), 3u);
}

TEST(Pattern, Grammar) {
  EXPECT_EQ(matches("[C,N]", "CNO"), 2u);
  EXPECT_EQ(matches("[!C]", "CNO"), 2u);
  EXPECT_EQ(matches("[CR]", "C1CC1C"), 3u);
  EXPECT_EQ(matches("[CR0]", "C1CC1C"), 1u);
  EXPECT_EQ(matches("C!@C", "C1CC1C"), 1u);
  EXPECT_EQ(matches("C@C", "C1CC1C"), 3u);
  EXPECT_EQ(matches("[N+](=O)[O-]", "C[N+](=O)[O-]"), 1u);
  EXPECT_EQ(matches("[D3]", "CC(C)C"), 1u);
  EXPECT_EQ(matches("[CH3]", "CC(C)C"), 3u);
  EXPECT_EQ(matches("C1CC1", "C1CC1"), 1u);
  EXPECT_EQ(matches("a", "c1ccncc1"), 6u);
  EXPECT_EQ(matches("n", "c1ccncc1"), 1u);
  EXPECT_EQ(matches("*", "CCO"), 3u);
}

TEST(Pattern, CompileErrors) {
  EXPECT_THROW(Pattern::compile("C("), PatternError);
  EXPECT_THROW(Pattern::compile("[Q]"), PatternError);
  EXPECT_THROW(Pattern::compile("C.C"), PatternError);
  EXPECT_THROW(Pattern::compile(""), PatternError);
  EXPECT_THROW(Pattern::compile("C1CC"), PatternError);
  EXPECT_THROW(Pattern::compile("[C;R]"), PatternError);
}

TEST(Pattern, ShippedSetsCompileAndFit) {
  const auto &keys = structural_keys();
  const auto &tox = toxicity_patterns();
  EXPECT_EQ(keys.arity, 166u);
  EXPECT_EQ(tox.arity, 827u);
  EXPECT_TRUE(keys.binary);
  EXPECT_FALSE(tox.binary);
  EXPECT_LE(keys.entries.size(), keys.arity);
  EXPECT_LE(tox.entries.size(), tox.arity);
  for (const auto &e: keys.entries) EXPECT_LT(e.index, keys.arity);
  EXPECT_FALSE(keys.content_hash.empty());
}

TEST(Pattern, SetFileParsing) {
  auto set = PatternSet::parse("t", "# comment\n0\tC=O\tcarbonyl\n2\t[OX2H]\thydroxyl\n", 4, false);
  ASSERT_EQ(set.entries.size(), 2u);
  auto v = match_patterns(mol("OCC=O"), set);
  EXPECT_EQ(v, (std::vector<double>{1, 0, 1, 0}));
  EXPECT_THROW(PatternSet::parse("t", "0\tC(\tbad\n", 4, false), PatternError);
  EXPECT_THROW(PatternSet::parse("t", "9\tC\tout of range\n", 4, false), PatternError);
}

TEST(Pattern, MatchesBruteForceOnRandomMolecules) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto m = oracles::random_molecule(rng, 10);
    ASSERT_EQ(match_patterns(m, toxicity_patterns()), oracles::brute_force_pattern_vector(toxicity_patterns(), m))
        << chem::write_smiles(m).text;
  }
}

TEST(Descriptors, HandValues) {
  EXPECT_EQ(descriptor(mol("CCO"), "heavy_atom_count"), 3.0);
  EXPECT_EQ(descriptor(mol("C1CC1C1CC1"), "ring_count"), 2.0);
  EXPECT_NEAR(molecular_weight(mol("C")), 16.043, 1e-3);
  EXPECT_NEAR(descriptor(mol("C"), "mol_weight"), 12.011 + 4 * 1.008, 1e-9);
  EXPECT_THROW(descriptor(mol("C"), "no_such_descriptor"), std::out_of_range);
}

TEST(Descriptors, ShippedLayout) {
  const auto &list = DescriptorList::shipped();
  ASSERT_EQ(list.names.size(), kDescriptorCount);
  auto v = descriptors(mol("c1ccccc1O"));
  ASSERT_EQ(v.size(), kDescriptorCount);
  for (double x: v) EXPECT_TRUE(std::isfinite(x));
}

TEST(Descriptors, RingPerception) {
  EXPECT_EQ(perceive_rings(mol("c1ccc2ccccc2c1")).size(), 2u);
  EXPECT_EQ(perceive_rings(mol("CCO")).size(), 0u);
  EXPECT_EQ(perceive_rings(mol("C1CC1C1CC1")).size(), 2u);
}

TEST(Assemble, LayoutAndInvariance) {
  auto v = assemble(mol("CCO"));
  ASSERT_EQ(v.size(), 9385u);
  EXPECT_EQ(v, assemble(mol("OCC")));
  auto keys = match_patterns(mol("CCO"), structural_keys());
  EXPECT_TRUE(std::equal(keys.begin(), keys.end(), v.begin() + FeatureLayout::kKeyOffset));
  EXPECT_EQ(FeatureLayout::kDescriptorOffset - FeatureLayout::kKeyOffset, 166u);
  EXPECT_EQ(FeatureLayout::kToxPatternOffset - FeatureLayout::kDescriptorOffset, 200u);
}

TEST(Assemble, FeatureMatrixFileRoundTrip) {
  Matrix m(2, 3);
  m(0, 0) = 1.5;
  m(1, 2) = -2;
  auto path = ::testing::TempDir() + "/m.bin";
  write_feature_matrix(path, m);
  EXPECT_EQ(read_feature_matrix(path), m);
}
