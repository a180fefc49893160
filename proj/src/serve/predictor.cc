// SPDX-License-Identifier: Apache-2.0

#include "toxbench/serve/predictor.h"

#include <stdexcept>

#include "toxbench/chem/smiles.h"
#include "toxbench/featurize/features.h"

namespace toxbench::serve {

Predictor::Predictor(models::Artifact artifact, double fallback_probability)
    : artifact_(std::move(artifact)), fallback_(fallback_probability) {
  if (!(fallback_ >= 0 && fallback_ <= 1)) throw std::invalid_argument("fallback probability must be in [0, 1]");
}

Probabilities Predictor::predict_one(const std::string &smiles, bool *fallback) const {
  Probabilities out;
  auto parsed = chem::try_parse_smiles(smiles);
  if (fallback) *fallback = !parsed.molecule;
  if (!parsed.molecule) {
    out.fill(fallback_);
    return out;
  }
  Matrix x;
  x.append_row(artifact_.pipeline.apply(featurize::assemble(*parsed.molecule)));
  Matrix p = models::predict_proba(artifact_.model, x);
  std::copy(p.row(0).begin(), p.row(0).end(), out.begin());
  return out;
}

protocol::PredictResponse Predictor::predict(const protocol::PredictRequest &req, std::size_t *fallbacks) const {
  protocol::PredictResponse resp;
  resp.model_info = model_info();
  std::size_t n_fallback = 0;
  for (const auto &s: req.smiles) {
    bool fb = false;
    auto p = predict_one(s, &fb);
    n_fallback += fb;
    auto &row = resp.predictions[s];
    for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) row[std::string(dataset::endpoints()[e].name)] = p[e];
  }
  if (fallbacks) *fallbacks = n_fallback;
  return resp;
}

std::map<std::string, std::string> Predictor::model_info() const {
  return {{"name", artifact_.name}, {"version", artifact_.version}, {"kind", models::model_kind(artifact_.model)}};
}

}  // namespace toxbench::serve
