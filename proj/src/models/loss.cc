// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/loss.h"

#include <cmath>
#include <stdexcept>

namespace toxbench::models {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

LossResult masked_bce(const Matrix &logits, const dataset::LabelMatrix &truth, std::span<const std::size_t> rows) {
  if (logits.cols() != dataset::kEndpointCount) throw std::invalid_argument("masked_bce: logits need 12 columns");
  if (!rows.empty() && rows.size() != logits.rows()) throw std::invalid_argument("masked_bce: row map mismatch");
  if (rows.empty() && logits.rows() != truth.rows()) throw std::invalid_argument("masked_bce: row count mismatch");

  LossResult out;
  out.grad = Matrix(logits.rows(), logits.cols());
  double total = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const std::size_t tr = rows.empty() ? i : rows[i];
    for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
      auto y = truth.get(tr, e);
      if (!y) continue;
      const double z = logits(i, e);
      total += std::max(z, 0.0) - z * *y + std::log1p(std::exp(-std::abs(z)));
      out.grad(i, e) = sigmoid(z) - *y;
      ++out.present;
    }
  }
  if (out.present == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.present);
  out.loss = total * inv;
  for (auto &g: out.grad.data()) g *= inv;
  return out;
}

}  // namespace toxbench::models
