// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "toxbench/serve/predictor.h"

namespace toxbench::serve {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8000;  // 0 picks a free port
  std::size_t max_batch = 4096;
};

// POST /predict, GET /healthz, GET /metrics.
class PredictServer {
public:
  PredictServer(std::shared_ptr<const Predictor> predictor, ServerConfig cfg);
  ~PredictServer();
  PredictServer(const PredictServer &) = delete;
  PredictServer &operator=(const PredictServer &) = delete;

  // Binds the socket; returns the bound port. Throws std::runtime_error.
  int bind();
  // Serves until stop(); bind() must have succeeded.
  void serve_forever();
  // bind() + serve on a background thread.
  int start();
  void stop();

  int port() const { return port_; }
  std::uint64_t request_count() const { return requests_.load(); }
  std::uint64_t fallback_count() const { return fallbacks_.load(); }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<const Predictor> predictor_;
  ServerConfig cfg_;
  int port_ = -1;
  std::thread thread_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> fallbacks_{0};
  std::atomic<std::uint64_t> next_request_id_{1};
};

}  // namespace toxbench::serve
