// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "toxbench/metrics/metrics.h"

using namespace toxbench;
using namespace toxbench::metrics;

namespace {

double auc(std::vector<double> s, std::vector<std::uint8_t> y) { return roc_auc(s, y); }

std::vector<int> as_int(const std::vector<std::uint8_t> &v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(RocAuc, HandValues) {
  EXPECT_EQ(auc({0.9, 0.1}, {1, 0}), 1.0);
  EXPECT_EQ(auc({0.8, 0.8, 0.6, 0.2}, {1, 0, 1, 0}), 0.625);
  EXPECT_EQ(auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}), 0.5);
  EXPECT_EQ(auc({0.1, 0.9}, {1, 0}), 0.0);
}

TEST(RocAuc, Errors) {
  EXPECT_THROW(auc({0.1, 0.2}, {1, 1}), UndefinedAuc);
  EXPECT_THROW(auc({0.1}, {1, 0}), std::invalid_argument);
  EXPECT_THROW(auc({std::numeric_limits<double>::quiet_NaN(), 0.1}, {1, 0}), std::invalid_argument);
  std::vector<double> s{0.1, 0.2, 0.3};
  std::vector<std::uint8_t> y{1, 0, 0}, mask{0, 1, 1};
  EXPECT_THROW(roc_auc(s, y, mask), UndefinedAuc);
}

TEST(RocAuc, MatchesBruteForceWithTies) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    std::uniform_int_distribution<int> level(0, 5);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = level(rng) / 5.0;
      y[k] = std::bernoulli_distribution(0.4)(rng);
    }
    y[0] = 1;
    y[1] = 0;
    ASSERT_NEAR(roc_auc(s, y), oracles::brute_force_auc(s, as_int(y)), 1e-12);
  }
}

TEST(RocAuc, MonotoneInvarianceAndComplement) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s(30), t(30);
    std::vector<std::uint8_t> y(30), flipped(30);
    for (std::size_t k = 0; k < 30; ++k) {
      s[k] = std::round(u(rng) * 10) / 10;
      t[k] = std::exp(3 * s[k]) - 7;
      y[k] = k % 3 == 0;
      flipped[k] = 1 - y[k];
    }
    ASSERT_EQ(roc_auc(s, y), roc_auc(t, y));
    ASSERT_NEAR(roc_auc(s, y) + roc_auc(s, flipped), 1.0, 1e-12);
  }
}

TEST(ScoreRun, PerfectPredictionsAndMaskedCells) {
  dataset::LabelMatrix truth;
  std::mt19937_64 rng(1);
  for (int r = 0; r < 40; ++r) {
    dataset::LabelRow row;
    for (std::size_t e = 0; e < 12; ++e)
      if (std::bernoulli_distribution(0.7)(rng) || r < 2) row[e] = (r + e) % 2;
    truth.add_row("r" + std::to_string(r), "C", row);
  }
  Matrix p(40, 12);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t e = 0; e < 12; ++e) p(r, e) = truth.present(r, e) ? truth.label(r, e) : 0.5;
  auto s = score_run(p, truth);
  ASSERT_EQ(s.per_endpoint.size(), 12u);
  EXPECT_EQ(s.mean_auc, 1.0);
  for (std::size_t e = 0; e < 12; ++e) {
    auto c = dataset::endpoint_class_counts(truth, e);
    EXPECT_EQ(s.per_endpoint[e].n_pos, c.n_pos);
    EXPECT_EQ(s.per_endpoint[e].n_neg, c.n_neg);
  }
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t e = 0; e < 12; ++e)
      if (!truth.present(r, e)) p(r, e) = 0.99;
  auto again = score_run(p, truth);
  for (std::size_t e = 0; e < 12; ++e) EXPECT_EQ(again.per_endpoint[e].auc, s.per_endpoint[e].auc);
}

TEST(ScoreRun, Errors) {
  dataset::LabelMatrix truth;
  dataset::LabelRow row;
  for (auto &c: row) c = 1;
  truth.add_row("a", "C", row);
  for (auto &c: row) c = 0;
  truth.add_row("b", "C", row);
  EXPECT_THROW(score_run(Matrix(3, 12), truth), std::invalid_argument);
  Matrix bad(2, 12, 0.5);
  bad(0, 3) = 1.5;
  EXPECT_THROW(score_run(bad, truth), std::invalid_argument);
  dataset::LabelMatrix single;
  single.add_row("a", "C", row);
  single.add_row("b", "C", row);
  try {
    score_run(Matrix(2, 12, 0.5), single);
    FAIL();
  } catch (const UndefinedAuc &e) {
    EXPECT_NE(std::string(e.what()).find("NR-AR"), std::string::npos);
  }
}

TEST(ScoreRun, RandomPredictionsNearHalf) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  dataset::LabelMatrix truth;
  for (int r = 0; r < 1000; ++r) {
    dataset::LabelRow row;
    for (auto &c: row) c = std::bernoulli_distribution(0.3)(rng);
    truth.add_row("r" + std::to_string(r), "C", row);
  }
  Matrix p(1000, 12);
  for (auto &x: p.data()) x = u(rng);
  auto s = score_run(p, truth);
  EXPECT_GE(s.mean_auc, 0.45);
  EXPECT_LE(s.mean_auc, 0.55);
}

TEST(Aggregate, MedianAndMad) {
  auto a = aggregate_runs({0.84, 0.85, 0.83, 0.86, 0.82});
  EXPECT_EQ(a.median, 0.84);
  // |0.85 - 0.84| is 0.010000000000000009 in binary floating point
  EXPECT_NEAR(a.mad, 0.01, 1e-12);
  auto one = aggregate_runs({0.5});
  EXPECT_EQ(one.median, 0.5);
  EXPECT_EQ(one.mad, 0.0);
  EXPECT_EQ(aggregate_runs({0.7, 0.7, 0.7}).mad, 0.0);
  EXPECT_EQ(median({1, 2, 3, 4}), 2.5);
  EXPECT_THROW(aggregate_runs({}), std::invalid_argument);
}

TEST(Format, ThreeDecimals) {
  EXPECT_EQ(format_auc(0.84567), "0.846");
  EXPECT_EQ(format_auc(1.0), "1.000");
}
