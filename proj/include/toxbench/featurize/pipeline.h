// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxbench/util/matrix.h"

namespace toxbench::featurize {

// A disengaged threshold disables that filter; with every option off the
// pipeline is the identity.
struct PipelineConfig {
  std::optional<double> variance_threshold = 0.0;
  std::optional<double> correlation_threshold = 0.95;
  bool quantize = false;
  bool normalize = true;
  std::optional<std::size_t> top_k_variance;

  // Throws std::invalid_argument.
  void validate(std::size_t feature_count) const;

  static PipelineConfig identity() { return {std::nullopt, std::nullopt, false, false, std::nullopt}; }
};

struct FittedPipeline {
  PipelineConfig config;
  std::size_t input_width = 0;
  std::vector<std::size_t> kept_indices;  // strictly increasing
  std::vector<double> mean;               // per kept feature, after quantization
  std::vector<double> stddev;             // population std, before flooring
  // Per kept feature: {min, q1, q2, q3, max} for quantized descriptor
  // features, empty otherwise.
  std::vector<std::vector<double>> bin_edges;
  std::size_t fit_rows = 0;
  std::string fit_data_hash;
  std::string layout_hash;

  std::size_t output_width() const { return kept_indices.size(); }

  // Throws std::invalid_argument("layout mismatch ...") on wrong width.
  std::vector<double> apply(std::span<const double> row) const;
  Matrix apply(const Matrix &m) const;

  std::string serialize() const;
  static FittedPipeline deserialize(std::string_view bytes);
  std::string content_hash() const;
};

inline constexpr double kStdFloor = 1e-8;

// Quantization touches only the descriptor block and only when the matrix
// has the full 9,385-wide layout. Throws std::invalid_argument on an empty
// matrix, non-finite values or a bad config.
FittedPipeline fit_pipeline(const Matrix &m, const PipelineConfig &cfg);

}  // namespace toxbench::featurize
