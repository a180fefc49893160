// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "toxbench/dataset/dataset.h"
#include "toxbench/models/optimizer.h"
#include "toxbench/util/matrix.h"

namespace toxbench::models {

// Twelve independent logistic regressions sharing one input.
struct LinearModel {
  Matrix weights;             // 12 x d
  std::vector<double> bias;   // 12
  std::string pipeline_ref;   // content hash of the fitted pipeline

  std::size_t input_width() const { return weights.cols(); }
  Matrix logits(const Matrix &x) const;
  Matrix predict_proba(const Matrix &x) const;
};

struct LinearTraining {
  LinearModel model;
  double final_loss = 0;
};

// Mini-batch gradient descent on masked BCE + l2*|W|^2/2. Bit-reproducible
// for a fixed (seed, data, config). Throws TrainingDiverged on a
// non-finite loss and std::invalid_argument when no label is present.
LinearTraining train_linear(const Matrix &x, const dataset::LabelMatrix &truth, const TrainConfig &cfg);

}  // namespace toxbench::models
