// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/optimizer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace toxbench::models {

void TrainConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (!std::isfinite(momentum) || momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!std::isfinite(l2) || l2 < 0) throw std::invalid_argument("l2 must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"momentum", momentum}, {"l2", l2},
          {"epochs", epochs},               {"batch_size", batch_size}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json &j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.l2 = j.value("l2", c.l2);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  return c;
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, double loss)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(loss) +
                         "); lower the learning rate"),
      epoch_(epoch) {}

void MomentumSgd::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("optimizer: parameter/gradient size mismatch");
  if (velocity_.size() != params.size()) velocity_.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mu_ * velocity_[i] - lr_ * grads[i];
    params[i] += velocity_[i];
  }
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < rows; i += batch_size)
    batches.emplace_back(order.begin() + i, order.begin() + std::min(rows, i + batch_size));
  return batches;
}

}  // namespace toxbench::models
