// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "toxbench/dataset/dataset.h"
#include "toxbench/models/artifact.h"
#include "toxbench/protocol/protocol.h"

namespace toxbench::serve {

using Probabilities = std::array<double, dataset::kEndpointCount>;

// Immutable after construction; predict() may be called concurrently.
class Predictor {
public:
  explicit Predictor(models::Artifact artifact, double fallback_probability = 0.5);

  // Probabilities for one SMILES, or the fallback for all twelve endpoints
  // when it does not parse (fallback set to true).
  Probabilities predict_one(const std::string &smiles, bool *fallback = nullptr) const;

  // Every SMILES is scored independently, so a molecule gets the same
  // numbers whatever batch it arrives in.
  protocol::PredictResponse predict(const protocol::PredictRequest &req, std::size_t *fallbacks = nullptr) const;

  std::map<std::string, std::string> model_info() const;
  const models::Artifact &artifact() const { return artifact_; }
  double fallback_probability() const { return fallback_; }

private:
  models::Artifact artifact_;
  double fallback_;
};

}  // namespace toxbench::serve
