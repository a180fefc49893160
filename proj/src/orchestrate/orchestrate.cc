// SPDX-License-Identifier: Apache-2.0

#include "toxbench/orchestrate/orchestrate.h"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "toxbench/util/hash.h"

namespace toxbench::orchestrate {

double RetryPolicy::backoff_before(std::size_t attempt) const {
  if (attempt < 2) return 0.0;
  return base_backoff_seconds * std::pow(backoff_factor, static_cast<double>(attempt - 2));
}

void real_sleep(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

void EvaluationJob::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (retry.max_attempts == 0) throw std::invalid_argument("retry.max_attempts must be >= 1");
  if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be >= 1");
  if (!(timeout_seconds > 0)) throw std::invalid_argument("timeout must be positive");
}

std::string_view to_string(Status s) {
  switch (s) {
  case Status::kScored: return "scored";
  case Status::kRejected: return "rejected";
  case Status::kFailed: return "failed";
  }
  return "failed";
}

Status status_from_string(std::string_view s) {
  if (s == "scored") return Status::kScored;
  if (s == "rejected") return Status::kRejected;
  if (s == "failed") return Status::kFailed;
  throw std::invalid_argument("unknown evaluation status '" + std::string(s) + "'");
}

std::vector<double> EvaluationResult::backoff_schedule() const {
  std::vector<double> out;
  for (const auto &b: batches) out.insert(out.end(), b.backoffs.begin(), b.backoffs.end());
  return out;
}

nlohmann::json EvaluationResult::to_json() const {
  using nlohmann::json;
  json j;
  j["submission_id"] = submission_id;
  j["status"] = std::string(to_string(status));
  j["request_count"] = request_count;
  j["batch_size"] = batch_size;
  j["molecules"] = molecules;
  j["unique_molecules"] = unique_molecules;
  j["dataset_hash"] = dataset_hash;
  j["wall_seconds"] = wall_seconds;
  j["error"] = error;
  if (score) {
    j["mean_auc"] = score->mean_auc;
    json eps = json::array();
    for (const auto &e: score->per_endpoint)
      eps.push_back({{"endpoint", e.endpoint}, {"auc", e.auc}, {"n_pos", e.n_pos}, {"n_neg", e.n_neg}});
    j["per_endpoint"] = eps;
  } else {
    j["mean_auc"] = nullptr;
    j["per_endpoint"] = json::array();
  }
  j["validation"] = json::parse(protocol::encode_report(validation));
  json bl = json::array();
  for (const auto &b: batches)
    bl.push_back({{"index", b.index}, {"size", b.size}, {"attempts", b.attempts}, {"backoffs", b.backoffs},
                  {"error", b.error}});
  j["batches"] = bl;
  return j;
}

EvaluationResult EvaluationResult::from_json(const nlohmann::json &j) {
  EvaluationResult r;
  r.submission_id = j.value("submission_id", "");
  r.status = status_from_string(j.at("status").get<std::string>());
  r.request_count = j.value("request_count", std::size_t{0});
  r.batch_size = j.value("batch_size", std::size_t{0});
  r.molecules = j.value("molecules", std::size_t{0});
  r.unique_molecules = j.value("unique_molecules", std::size_t{0});
  r.dataset_hash = j.value("dataset_hash", "");
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.error = j.value("error", "");
  if (j.contains("mean_auc") && j["mean_auc"].is_number()) {
    metrics::RunScore s;
    s.mean_auc = j["mean_auc"].get<double>();
    for (const auto &e: j.at("per_endpoint"))
      s.per_endpoint.push_back({e.at("endpoint").get<std::string>(), e.at("auc").get<double>(),
                                e.value("n_pos", std::size_t{0}), e.value("n_neg", std::size_t{0})});
    r.score = std::move(s);
  }
  if (j.contains("validation"))
    for (const auto &v: j["validation"].value("violations", nlohmann::json::array())) {
      static const std::map<std::string, protocol::ViolationKind> kinds{
          {"missing_molecule", protocol::ViolationKind::kMissingMolecule},
          {"missing_target", protocol::ViolationKind::kMissingTarget},
          {"extra_key", protocol::ViolationKind::kExtraKey},
          {"non_finite", protocol::ViolationKind::kNonFinite},
          {"out_of_range", protocol::ViolationKind::kOutOfRange},
          {"malformed", protocol::ViolationKind::kMalformed}};
      auto it = kinds.find(v.value("kind", ""));
      if (it == kinds.end()) throw std::invalid_argument("unknown violation kind");
      r.validation.violations.push_back(
          {it->second, v.value("smiles", ""), v.value("endpoint", ""), v.value("detail", "")});
    }
  if (j.contains("batches"))
    for (const auto &b: j["batches"])
      r.batches.push_back({b.value("index", std::size_t{0}), b.value("size", std::size_t{0}),
                           b.value("attempts", std::size_t{0}), b.value("backoffs", std::vector<double>{}),
                           b.value("error", "")});
  return r;
}

std::vector<std::string> dedupe(const std::vector<std::string> &smiles) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto &s: smiles)
    if (seen.insert(s).second) out.push_back(s);
  return out;
}

std::vector<std::vector<std::string>> plan_batches(const std::vector<std::string> &smiles, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < smiles.size(); i += batch_size)
    out.emplace_back(smiles.begin() + static_cast<std::ptrdiff_t>(i),
                     smiles.begin() + static_cast<std::ptrdiff_t>(std::min(smiles.size(), i + batch_size)));
  return out;
}

namespace {

struct BatchOutcome {
  BatchLog log;
  bool failed = false;
  std::optional<protocol::PredictResponse> response;
  std::vector<protocol::Violation> violations;
};

BatchOutcome run_batch(std::size_t index, const std::vector<std::string> &batch, const EvaluationJob &job,
                       Transport &transport, const Sleeper &sleep, const std::atomic<bool> &abort,
                       std::atomic<std::size_t> &requests) {
  BatchOutcome out;
  out.log.index = index;
  out.log.size = batch.size();
  const protocol::PredictRequest req{batch};
  const std::string body = protocol::encode_request(req);
  for (std::size_t attempt = 1; attempt <= job.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      if (abort) break;
      double wait = job.retry.backoff_before(attempt);
      out.log.backoffs.push_back(wait);
      sleep(wait);
    }
    ++out.log.attempts;
    ++requests;
    TransportResponse resp;
    try {
      resp = transport.post_predict(body, job.timeout_seconds);
    } catch (const TransportError &e) {
      out.log.error = e.what();
      spdlog::warn("batch {} attempt {} transport error: {}", index, attempt, e.what());
      continue;
    }
    if (resp.status >= 500) {
      out.log.error = "HTTP " + std::to_string(resp.status);
      spdlog::warn("batch {} attempt {} server error {}", index, attempt, resp.status);
      continue;
    }
    if (resp.status != 200) {
      // The server refused a well-formed request; retrying cannot help.
      out.log.error = "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200);
      out.failed = true;
      return out;
    }
    out.log.error.clear();
    try {
      out.response = protocol::decode_response(resp.body);
    } catch (const protocol::DecodeError &e) {
      out.violations.push_back({protocol::ViolationKind::kMalformed, "", "", e.what()});
      return out;
    }
    auto report = protocol::validate_response(req, *out.response);
    out.violations = std::move(report.violations);
    return out;
  }
  out.failed = true;
  return out;
}

}  // namespace

EvaluationResult run_evaluation(EvaluationJob job, const dataset::LabelMatrix &data, Transport &transport,
                                const Sleeper &sleep) {
  const auto started = std::chrono::steady_clock::now();
  job.validate();
  if (data.rows() == 0) throw std::invalid_argument("evaluation dataset is empty");
  if (!job.dataset_path.empty() && job.dataset_hash.empty()) job.dataset_hash = file_content_hash(job.dataset_path);

  EvaluationResult result;
  result.submission_id = job.submission_id;
  result.batch_size = job.batch_size;
  result.molecules = data.rows();
  result.dataset_hash = job.dataset_hash;
  auto finish = [&](Status s) {
    result.status = s;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  };

  const auto unique = dedupe(data.smiles_list());
  result.unique_molecules = unique.size();
  const auto batches = plan_batches(unique, job.batch_size);

  std::vector<BatchOutcome> outcomes(batches.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> requests{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < batches.size();) {
      if (abort) {
        outcomes[i].log = {i, batches[i].size(), 0, {}, "skipped after an earlier batch failed"};
        outcomes[i].failed = true;
        continue;
      }
      outcomes[i] = run_batch(i, batches[i], job, transport, sleep, abort, requests);
      if (outcomes[i].failed) abort = true;
    }
  };
  const std::size_t n_threads = std::min(job.max_in_flight, batches.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto &t: threads) t.join();
  result.request_count = requests;

  // Merge by key: arrival order and partitioning cannot matter.
  std::map<std::string, std::map<std::string, double>> merged;
  bool failed = false;
  for (auto &o: outcomes) {
    result.batches.push_back(o.log);
    failed = failed || o.failed;
    for (auto &v: o.violations) result.validation.violations.push_back(std::move(v));
    if (o.response)
      for (auto &[smiles, row]: o.response->predictions) merged[smiles] = std::move(row);
  }
  if (failed) {
    for (const auto &b: result.batches)
      if (!b.error.empty()) {
        result.error = "batch " + std::to_string(b.index) + " failed after " + std::to_string(b.attempts) +
                       " attempt(s): " + b.error;
        break;
      }
    return finish(Status::kFailed);
  }
  if (!result.validation.ok()) {
    result.error = std::to_string(result.validation.violations.size()) + " validation violation(s)";
    return finish(Status::kRejected);
  }

  // Fan out to id-keyed rows; validation guarantees every cell exists.
  Matrix predictions(data.rows(), dataset::kEndpointCount);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto &row = merged.at(data.smiles(r));
    for (std::size_t e = 0; e < dataset::kEndpointCount; ++e)
      predictions(r, e) = row.at(std::string(dataset::endpoints()[e].name));
  }
  if (!job.dataset_path.empty()) {
    std::string now;
    try {
      now = file_content_hash(job.dataset_path);
    } catch (const std::exception &e) {
      now = std::string("unreadable: ") + e.what();
    }
    if (now != job.dataset_hash) {
      result.error = "dataset file changed during evaluation (" + job.dataset_hash + " -> " + now + ")";
      return finish(Status::kFailed);
    }
  }
  try {
    result.score = metrics::score_run(predictions, data);
  } catch (const std::exception &e) {
    result.error = std::string("scoring failed: ") + e.what();
    return finish(Status::kFailed);
  }
  return finish(Status::kScored);
}

RerunResult rerun_protocol(const std::vector<EvaluationJob> &jobs, const dataset::LabelMatrix &data,
                           const TransportFactory &factory, const Sleeper &sleep) {
  if (jobs.empty()) throw std::invalid_argument("rerun_protocol: no runs");
  RerunResult out;
  std::vector<double> means;
  for (const auto &job: jobs) {
    EvaluationResult r;
    try {
      auto transport = factory(job.endpoint_url);
      r = run_evaluation(job, data, *transport, sleep);
    } catch (const std::exception &e) {
      r.submission_id = job.submission_id;
      r.status = Status::kFailed;
      r.error = e.what();
    }
    if (r.status == Status::kScored) means.push_back(r.score->mean_auc);
    else if (out.error.empty())
      out.error = "run " + std::to_string(out.runs.size()) + " (" + job.endpoint_url + ") " +
                  std::string(to_string(r.status)) + ": " + r.error;
    out.runs.push_back(std::move(r));
  }
  if (out.error.empty()) out.aggregate = metrics::aggregate_runs(means);
  return out;
}

}  // namespace toxbench::orchestrate
