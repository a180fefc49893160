// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/workflow.h"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "toxbench/chem/smiles.h"
#include "toxbench/featurize/features.h"

namespace toxbench::models {

Matrix featurize_rows(const dataset::LabelMatrix &m, std::size_t threads) {
  const std::size_t n = m.rows();
  std::vector<featurize::FeatureVector> rows(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      auto parsed = chem::try_parse_smiles(m.smiles(i));
      if (!parsed.molecule) {
        errors[i] = "row " + std::to_string(i) + " (" + m.id(i) + "): unparseable SMILES '" + m.smiles(i) + "'";
        continue;
      }
      rows[i] = featurize::assemble(*parsed.molecule);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t: pool) t.join();
  for (const auto &e: errors)
    if (!e.empty()) throw std::invalid_argument(e);

  Matrix out(n, featurize::FeatureLayout::kTotal);
  for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

void TrainRequest::validate() const {
  if (kind != "linear" && kind != "snn" && kind != "knn")
    throw std::invalid_argument("model kind must be linear, snn or knn, got '" + kind + "'");
  if (name.empty() || version.empty()) throw std::invalid_argument("model name and version must not be empty");
  if (kind == "linear") linear.validate();
  if (kind == "snn") snn.validate();
  if (kind == "knn" && k == 0) throw std::invalid_argument("k must be >= 1");
}

Artifact train_artifact(const Matrix &features, const dataset::LabelMatrix &truth, const TrainRequest &req) {
  req.validate();
  if (features.rows() != truth.rows()) throw std::invalid_argument("feature rows do not match label rows");
  Artifact a;
  a.name = req.name;
  a.version = req.version;
  a.seed = req.seed;

  if (req.kind == "knn") {
    a.pipeline = featurize::fit_pipeline(features, featurize::PipelineConfig::identity());
    auto m = KnnModel::fit(features, truth, req.k, featurize::FeatureLayout::kEcfpWidth);
    m.pipeline_ref = a.pipeline.content_hash();
    a.hyperparameters = {{"k", req.k}, {"width", m.width}};
    a.model = std::move(m);
    return a;
  }

  a.pipeline = featurize::fit_pipeline(features, req.pipeline);
  const Matrix x = a.pipeline.apply(features);
  if (req.kind == "linear") {
    auto cfg = req.linear;
    cfg.seed = req.seed;
    auto t = train_linear(x, truth, cfg);
    t.model.pipeline_ref = a.pipeline.content_hash();
    a.hyperparameters = cfg.to_json();
    a.model = std::move(t.model);
  } else {
    auto cfg = req.snn;
    cfg.train.seed = req.seed;
    auto t = train_snn(x, truth, cfg);
    t.model.pipeline_ref = a.pipeline.content_hash();
    a.hyperparameters = cfg.to_json();
    a.model = std::move(t.model);
  }
  return a;
}

}  // namespace toxbench::models
