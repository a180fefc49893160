// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/linear.h"

#include <cmath>

#include "toxbench/models/loss.h"

namespace toxbench::models {

namespace {
constexpr std::size_t kOut = dataset::kEndpointCount;

Matrix gather_rows(const Matrix &x, const std::vector<std::size_t> &rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}
}  // namespace

Matrix LinearModel::logits(const Matrix &x) const {
  if (x.cols() != input_width())
    throw std::invalid_argument("linear model expects width " + std::to_string(input_width()) + ", got " +
                                std::to_string(x.cols()));
  Matrix z(x.rows(), kOut);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (std::size_t e = 0; e < kOut; ++e) {
      auto w = weights.row(e);
      double s = bias[e];
      for (std::size_t c = 0; c < xr.size(); ++c) s += w[c] * xr[c];
      z(r, e) = s;
    }
  }
  return z;
}

Matrix LinearModel::predict_proba(const Matrix &x) const {
  Matrix p = logits(x);
  for (auto &v: p.data()) v = sigmoid(v);
  return p;
}

LinearTraining train_linear(const Matrix &x, const dataset::LabelMatrix &truth, const TrainConfig &cfg) {
  cfg.validate();
  if (x.rows() != truth.rows()) throw std::invalid_argument("train_linear: feature/label row mismatch");
  if (truth.present_count() == 0) throw std::invalid_argument("train_linear: no labels present");
  for (double v: x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("train_linear: non-finite feature");

  const std::size_t d = x.cols();
  LinearTraining out;
  LinearModel &m = out.model;
  m.weights = Matrix(kOut, d);
  m.bias.assign(kOut, 0.0);

  // Parameters laid out as [W row-major | b].
  std::vector<double> params(kOut * d + kOut, 0.0);
  std::vector<double> grads(params.size());
  MomentumSgd opt(cfg.learning_rate, cfg.momentum);
  auto sync = [&] {
    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(kOut * d), m.weights.data().begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(kOut * d), params.end(), m.bias.begin());
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto &batch: epoch_batches(x.rows(), cfg.batch_size, cfg.seed, epoch)) {
      Matrix xb = gather_rows(x, batch);
      auto loss = masked_bce(m.logits(xb), truth, batch);
      if (!std::isfinite(loss.loss)) throw TrainingDiverged(epoch, loss.loss);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto xr = xb.row(i);
        for (std::size_t e = 0; e < kOut; ++e) {
          const double g = loss.grad(i, e);
          if (g == 0.0) continue;
          double *gw = grads.data() + e * d;
          for (std::size_t c = 0; c < d; ++c) gw[c] += g * xr[c];
          grads[kOut * d + e] += g;
        }
      }
      for (std::size_t k = 0; k < kOut * d; ++k) grads[k] += cfg.l2 * params[k];
      opt.step(params, grads);
      sync();
    }
  }
  auto final_loss = masked_bce(m.logits(x), truth);
  if (!std::isfinite(final_loss.loss)) throw TrainingDiverged(cfg.epochs, final_loss.loss);
  out.final_loss = final_loss.loss;
  return out;
}

}  // namespace toxbench::models
