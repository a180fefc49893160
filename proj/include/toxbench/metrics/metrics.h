// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxbench/dataset/dataset.h"
#include "toxbench/util/matrix.h"

namespace toxbench::metrics {

class UndefinedAuc: public std::domain_error {
public:
  explicit UndefinedAuc(const std::string &what): std::domain_error(what) {}
};

// Mann-Whitney AUC with midrank ties: the fraction of (positive, negative)
// pairs ranked correctly, ties counting one half. Masked-out entries (mask
// false) are ignored. Throws UndefinedAuc when either class is empty after
// masking and std::invalid_argument on length mismatch.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
               std::span<const std::uint8_t> mask);
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EndpointScore {
  std::string endpoint;
  double auc = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct RunScore {
  std::vector<EndpointScore> per_endpoint;
  double mean_auc = 0;
};

// predictions: rows x 12 in the truth matrix's row order. Throws
// std::invalid_argument on a shape mismatch or a value outside [0, 1] and
// UndefinedAuc naming the first single-class endpoint.
RunScore score_run(const Matrix &predictions, const dataset::LabelMatrix &truth);

struct AggregateScore {
  std::vector<double> run_means;
  double median = 0;
  double mad = 0;
};

double median(std::vector<double> values);
// Throws std::invalid_argument on an empty list.
AggregateScore aggregate_runs(const std::vector<double> &run_means);

// Three decimals, as reported in leaderboard tables.
std::string format_auc(double auc);

}  // namespace toxbench::metrics
