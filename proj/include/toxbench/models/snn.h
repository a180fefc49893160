// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxbench/dataset/dataset.h"
#include "toxbench/models/optimizer.h"
#include "toxbench/util/matrix.h"

namespace toxbench::models {

struct SeluConstants {
  static constexpr double kLambda = 1.0507009873554805;
  static constexpr double kAlpha = 1.6732632423543772;
};

double selu(double x);
double selu_derivative(double x);

// Alpha dropout: dropped units take the SELU saturation value -lambda*alpha
// and an affine correction keeps zero mean / unit variance. Identity when
// rate is 0. Deterministic for a given seed.
std::vector<double> alpha_dropout(std::span<const double> values, double rate, std::uint64_t seed);

struct SnnConfig {
  std::vector<std::size_t> hidden{512, 256};
  double dropout_rate = 0.0;
  TrainConfig train{0.01, 0.9, 1e-5, 50, 32, 0};

  void validate() const;
  nlohmann::json to_json() const;
  static SnnConfig from_json(const nlohmann::json &j);
};

struct SnnModel {
  // widths = {input, hidden..., 12}; layer l maps widths[l] -> widths[l+1].
  std::vector<std::size_t> widths;
  std::vector<Matrix> weights;              // out x in
  std::vector<std::vector<double>> biases;  // out
  double dropout_rate = 0.0;
  std::string pipeline_ref;

  std::size_t input_width() const { return widths.front(); }
  std::size_t layer_count() const { return weights.size(); }

  // N(0, 1/fan_in) weights, zero biases.
  static SnnModel initialize(std::vector<std::size_t> widths, double dropout_rate, std::uint64_t seed);

  Matrix logits(const Matrix &x) const;
  Matrix predict_proba(const Matrix &x) const;
  // Post-SELU activations of every hidden layer at inference.
  std::vector<Matrix> hidden_activations(const Matrix &x) const;

  std::size_t parameter_count() const;
  // [W0 row-major | b0 | W1 | b1 | ...]
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> p);
};

struct SnnGradient {
  double loss = 0;
  std::vector<double> grad;  // flat parameter order
};

// Masked BCE (+ l2/2 * sum W^2) and its gradient by backpropagation. When
// dropout_seed is set, alpha dropout is applied after every hidden layer.
SnnGradient snn_gradient(const SnnModel &model, const Matrix &x, const dataset::LabelMatrix &truth,
                         std::span<const std::size_t> rows, double l2,
                         std::optional<std::uint64_t> dropout_seed = std::nullopt);

struct SnnTraining {
  SnnModel model;
  double final_loss = 0;
};

SnnTraining train_snn(const Matrix &x, const dataset::LabelMatrix &truth, const SnnConfig &cfg);

}  // namespace toxbench::models
