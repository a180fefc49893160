// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "toxbench/dataset/dataset.h"
#include "toxbench/util/matrix.h"

namespace toxbench::models {

double sigmoid(double z);

struct LossResult {
  double loss = 0;
  Matrix grad;  // d loss / d logits, same shape as the logits
  std::size_t present = 0;
};

// Mean binary cross-entropy over present label cells, in the stable form
// max(z,0) - z*y + log1p(exp(-|z|)). Logit row i is scored against truth
// row rows[i] (or row i when `rows` is empty). Absent cells get exactly zero
// gradient; with no present cell the loss is 0.
LossResult masked_bce(const Matrix &logits, const dataset::LabelMatrix &truth, std::span<const std::size_t> rows = {});

}  // namespace toxbench::models
