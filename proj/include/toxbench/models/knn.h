// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toxbench/dataset/dataset.h"
#include "toxbench/util/matrix.h"

namespace toxbench::models {

// Sum(min) / Sum(max) over paired counts; 1.0 when both are all zero.
// Throws std::invalid_argument on a width mismatch.
double tanimoto(std::span<const double> a, std::span<const double> b);

// Non-zero (index, count) pairs in ascending index order.
using SparseCounts = std::vector<std::pair<std::uint32_t, double>>;
SparseCounts to_sparse(std::span<const double> dense);
double tanimoto(const SparseCounts &a, const SparseCounts &b);

struct KnnModel {
  std::size_t k = 5;
  std::size_t width = 0;  // fingerprint width read from the front of each input row
  std::vector<SparseCounts> fingerprints;
  std::vector<dataset::LabelRow> labels;
  std::string pipeline_ref;

  // Reads the first `width` columns of every row of x.
  static KnnModel fit(const Matrix &x, const dataset::LabelMatrix &truth, std::size_t k, std::size_t width);

  // Per endpoint: similarity-weighted mean over the k most similar stored
  // rows that carry that endpoint's label (ties by lower store index). Falls
  // back to the unweighted mean when all k similarities are zero and to 0.5
  // when no stored row is labeled.
  std::array<double, dataset::kEndpointCount> predict(std::span<const double> fingerprint) const;
  Matrix predict_proba(const Matrix &x) const;
};

}  // namespace toxbench::models
