// SPDX-License-Identifier: Apache-2.0

#include "toxbench/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace toxbench::metrics {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
               std::span<const std::uint8_t> mask) {
  if (scores.size() != labels.size() || scores.size() != mask.size())
    throw std::invalid_argument("roc_auc: scores, labels and mask differ in length");
  std::vector<std::pair<double, bool>> items;
  items.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) {
      if (std::isnan(scores[i])) throw std::invalid_argument("roc_auc: NaN score");
      items.emplace_back(scores[i], labels[i] != 0);
    }
  std::sort(items.begin(), items.end(), [](const auto &a, const auto &b) { return a.first < b.first; });

  // Sum of midranks of the positives; ranks start at 1.
  double rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < items.size() && items[j].first == items[i].first) pos_in_group += items[j++].second;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(pos_in_group);
    n_pos += pos_in_group;
    i = j;
  }
  const std::size_t n_neg = items.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UndefinedAuc("AUC undefined: " + std::to_string(n_pos) + " positives, " + std::to_string(n_neg) +
                       " negatives");
  const double p = static_cast<double>(n_pos), n = static_cast<double>(n_neg);
  return (rank_sum - p * (p + 1) / 2) / (p * n);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> mask(scores.size(), 1);
  return roc_auc(scores, labels, mask);
}

RunScore score_run(const Matrix &predictions, const dataset::LabelMatrix &truth) {
  if (predictions.rows() != truth.rows() || predictions.cols() != dataset::kEndpointCount)
    throw std::invalid_argument("score_run: predictions must be " + std::to_string(truth.rows()) + " x 12");
  for (double v: predictions.data())
    if (!std::isfinite(v) || v < 0 || v > 1) throw std::invalid_argument("score_run: prediction outside [0, 1]");

  RunScore run;
  double total = 0;
  const std::size_t n = truth.rows();
  std::vector<double> scores(n);
  std::vector<std::uint8_t> labels(n), mask(n);
  for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
    for (std::size_t r = 0; r < n; ++r) {
      scores[r] = predictions(r, e);
      auto v = truth.get(r, e);
      mask[r] = v.has_value();
      labels[r] = v.value_or(0);
    }
    const auto name = std::string(dataset::endpoints()[e].name);
    auto counts = dataset::endpoint_class_counts(truth, e);
    double auc;
    try {
      auc = roc_auc(scores, labels, mask);
    } catch (const UndefinedAuc &err) {
      throw UndefinedAuc(name + ": " + err.what());
    }
    run.per_endpoint.push_back({name, auc, counts.n_pos, counts.n_neg});
    total += auc;
  }
  run.mean_auc = total / static_cast<double>(dataset::kEndpointCount);
  return run;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

AggregateScore aggregate_runs(const std::vector<double> &run_means) {
  if (run_means.empty()) throw std::invalid_argument("aggregate_runs: no runs");
  AggregateScore a;
  a.run_means = run_means;
  a.median = median(run_means);
  std::vector<double> dev;
  for (double x: run_means) dev.push_back(std::abs(x - a.median));
  a.mad = median(dev);
  return a;
}

std::string format_auc(double auc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", auc);
  return buf;
}

}  // namespace toxbench::metrics
