// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace toxbench::models {

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double l2 = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json &j);
};

class TrainingDiverged: public std::runtime_error {
public:
  TrainingDiverged(std::size_t epoch, double loss);
  std::size_t epoch() const { return epoch_; }

private:
  std::size_t epoch_;
};

// Gradient descent with heavy-ball momentum: v = mu*v - lr*g; p += v.
class MomentumSgd {
public:
  MomentumSgd(double learning_rate, double momentum): lr_(learning_rate), mu_(momentum) {}
  void step(std::span<double> params, std::span<const double> grads);

private:
  double lr_;
  double mu_;
  std::vector<double> velocity_;
};

// Seeded mini-batch order for one epoch.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch);

}  // namespace toxbench::models
