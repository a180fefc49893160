// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

#include "json.hpp"
#include "toxbench/featurize/pipeline.h"
#include "toxbench/models/knn.h"
#include "toxbench/models/linear.h"
#include "toxbench/models/snn.h"

namespace toxbench::models {

using AnyModel = std::variant<LinearModel, SnnModel, KnnModel>;

std::string model_kind(const AnyModel &m);
std::size_t model_input_width(const AnyModel &m);
const std::string &model_pipeline_ref(const AnyModel &m);
// rows x 12 probabilities for pipeline-transformed inputs.
Matrix predict_proba(const AnyModel &m, const Matrix &x);

// A model bundled with the preprocessing it was trained behind.
struct Artifact {
  std::string name;
  std::string version;
  AnyModel model;
  featurize::FittedPipeline pipeline;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::uint64_t seed = 0;
};

class ArtifactError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Writes manifest.json, weights.bin and pipeline.bin into `dir` (created if
// needed). Output bytes depend only on the artifact contents.
void save_artifact(const std::string &dir, const Artifact &a);

// Verifies content hashes, the feature layout and the pipeline/model
// widths; throws ArtifactError on any mismatch or truncation.
Artifact load_artifact(const std::string &dir);

std::string encode_weights(const AnyModel &m);
AnyModel decode_weights(std::string_view bytes);

}  // namespace toxbench::models
