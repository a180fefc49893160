// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "toxbench/dataset/dataset.h"
#include "toxbench/featurize/pipeline.h"
#include "toxbench/models/artifact.h"

namespace toxbench::models {

// Raw 9,385-wide features of every row, computed on up to `threads` threads.
// Row order matches the label matrix. Throws std::invalid_argument if a
// SMILES does not parse (the loader excludes those already).
Matrix featurize_rows(const dataset::LabelMatrix &m, std::size_t threads = 0);

struct TrainRequest {
  std::string kind = "linear";  // linear | snn | knn
  std::string name = "model";
  std::string version = "1";
  featurize::PipelineConfig pipeline;  // ignored for knn, which reads raw counts
  TrainConfig linear;
  SnnConfig snn;
  std::size_t k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fit the pipeline on `features`, train, and bundle both. The seed
// overrides the one in the per-model config.
Artifact train_artifact(const Matrix &features, const dataset::LabelMatrix &truth, const TrainRequest &req);

}  // namespace toxbench::models
