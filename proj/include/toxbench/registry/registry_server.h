// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "toxbench/dataset/dataset.h"
#include "toxbench/orchestrate/orchestrate.h"
#include "toxbench/registry/registry.h"

namespace toxbench::registry {

// Test data the server evaluates submissions against. Without it the
// evaluate endpoint answers 503 and results must be attached explicitly.
struct EvaluationSetup {
  dataset::LabelMatrix data;
  std::string dataset_path;
  std::size_t batch_size = 64;
  orchestrate::RetryPolicy retry;
  orchestrate::TransportFactory transport = orchestrate::make_http_transport;
  orchestrate::Sleeper sleep = orchestrate::real_sleep;
};

struct RegistryServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string admin_token;  // empty disables every admin route
  std::string ui_dir;       // mounted at /ui when set
  std::optional<EvaluationSetup> evaluation;
};

// Admin token from TOXBENCH_ADMIN_TOKEN, or empty.
std::string admin_token_from_env();

class RegistryServer {
public:
  RegistryServer(std::shared_ptr<Registry> registry, RegistryServerConfig cfg);
  ~RegistryServer();
  RegistryServer(const RegistryServer &) = delete;
  RegistryServer &operator=(const RegistryServer &) = delete;

  int bind();
  void serve_forever();
  int start();
  void stop();
  int port() const { return port_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<Registry> registry_;
  RegistryServerConfig cfg_;
  int port_ = -1;
  std::thread thread_;
};

}  // namespace toxbench::registry
