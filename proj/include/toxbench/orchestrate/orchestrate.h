// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "toxbench/dataset/dataset.h"
#include "toxbench/metrics/metrics.h"
#include "toxbench/protocol/protocol.h"

namespace toxbench::orchestrate {

struct TransportResponse {
  int status = 0;
  std::string body;
};

class TransportError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Sends one /predict body. Implementations throw TransportError when no
// HTTP response was obtained.
class Transport {
public:
  virtual ~Transport() = default;
  virtual TransportResponse post_predict(const std::string &body, double timeout_seconds) = 0;
};

// HTTP transport for "http://host:port[/prefix]"; posts to <prefix>/predict.
// Throws std::invalid_argument for a malformed or non-http URL.
std::unique_ptr<Transport> make_http_transport(const std::string &url);

struct RetryPolicy {
  std::size_t max_attempts = 3;
  double base_backoff_seconds = 1.0;
  double backoff_factor = 2.0;

  // Wait before attempt `attempt` (1-based, attempt >= 2).
  double backoff_before(std::size_t attempt) const;
};

using Sleeper = std::function<void(double seconds)>;
void real_sleep(double seconds);

struct EvaluationJob {
  std::string submission_id;
  std::string endpoint_url;
  std::size_t batch_size = 64;
  RetryPolicy retry;
  double timeout_seconds = 60;
  std::size_t max_in_flight = 4;
  std::string dataset_path;  // optional; when set its hash is checked before scoring
  std::string dataset_hash;  // filled from dataset_path when empty

  void validate() const;
};

enum class Status { kScored, kRejected, kFailed };
std::string_view to_string(Status s);
Status status_from_string(std::string_view s);

struct BatchLog {
  std::size_t index = 0;
  std::size_t size = 0;
  std::size_t attempts = 0;
  std::vector<double> backoffs;
  std::string error;
};

struct EvaluationResult {
  std::string submission_id;
  Status status = Status::kFailed;
  std::optional<metrics::RunScore> score;
  protocol::ValidationReport validation;
  std::size_t request_count = 0;
  std::size_t batch_size = 0;
  std::size_t molecules = 0;         // scored rows
  std::size_t unique_molecules = 0;  // sent over the wire
  std::string dataset_hash;
  double wall_seconds = 0;
  std::vector<BatchLog> batches;
  std::string error;

  // Backoff waits of all batches in batch order.
  std::vector<double> backoff_schedule() const;

  nlohmann::json to_json() const;
  static EvaluationResult from_json(const nlohmann::json &j);
};

// First occurrence of each SMILES, in order.
std::vector<std::string> dedupe(const std::vector<std::string> &smiles);

// Contiguous chunks of at most batch_size. Throws std::invalid_argument
// for batch_size 0.
std::vector<std::vector<std::string>> plan_batches(const std::vector<std::string> &smiles, std::size_t batch_size);

// Dedupe, batch, post with retries, merge by SMILES, fan out to rows,
// validate full coverage and score. Never throws for remote misbehaviour;
// the outcome is encoded in the status.
EvaluationResult run_evaluation(EvaluationJob job, const dataset::LabelMatrix &data, Transport &transport,
                                const Sleeper &sleep = real_sleep);

struct RerunResult {
  std::vector<EvaluationResult> runs;
  std::optional<metrics::AggregateScore> aggregate;
  std::string error;  // set when a run was not scored
};

using TransportFactory = std::function<std::unique_ptr<Transport>(const std::string &url)>;

// One job per artifact variant (e.g. one per training seed); aggregates the
// run means with median / MAD only when every run scored.
RerunResult rerun_protocol(const std::vector<EvaluationJob> &jobs, const dataset::LabelMatrix &data,
                           const TransportFactory &factory, const Sleeper &sleep = real_sleep);

}  // namespace toxbench::orchestrate
