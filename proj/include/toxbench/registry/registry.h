// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "toxbench/orchestrate/orchestrate.h"

namespace toxbench::registry {

struct ModelCard {
  std::string model_name, developer, paper_url, architecture, inference_notes, model_version, model_date,
      reproducibility_statement, intended_use, metric, training_data, evaluation_data, space_url, commit_hash;

  struct FieldError {
    std::string field;
    std::string message;
  };
  // Every problem, not just the first.
  std::vector<FieldError> validate() const;

  nlohmann::json to_json() const;
  // Unknown keys and non-string values are reported as field errors.
  static ModelCard from_json(const nlohmann::json &j, std::vector<FieldError> *errors = nullptr);
};

enum class Status { kPending, kEvaluating, kPreliminary, kApproved, kRejected, kFailed };
std::string_view to_string(Status s);
std::optional<Status> status_from_string(std::string_view s);
bool is_terminal(Status s);

enum class Decision { kApprove, kReject };

struct ResultRecord {
  std::string submission_id;
  nlohmann::json result;  // EvaluationResult::to_json()
  std::string dataset_hash;
  std::string platform;
  std::string created_at;
  int record_version = 1;
  std::string content_hash;  // over every other field

  nlohmann::json to_json() const;
  static ResultRecord from_json(const nlohmann::json &j);
  std::string compute_hash() const;
};

struct Submission {
  std::string id;
  std::uint64_t seq = 0;
  ModelCard card;
  Status status = Status::kPending;
  std::optional<ResultRecord> result;
  std::string reviewer;
  std::string review_note;
  std::map<std::string, std::string> transitions;  // status name -> timestamp

  std::optional<double> mean_auc() const;
  nlohmann::json to_json() const;
};

class CardRejected: public std::invalid_argument {
public:
  explicit CardRejected(std::vector<ModelCard::FieldError> errors);
  const std::vector<ModelCard::FieldError> &errors() const { return errors_; }

private:
  std::vector<ModelCard::FieldError> errors_;
};

class IllegalTransition: public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class NotFound: public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

struct LeaderboardQuery {
  std::set<Status> statuses{Status::kApproved};
  std::string text;  // case-insensitive substring of model name or developer
  enum class Key { kMeanAuc, kDate, kName } key = Key::kMeanAuc;
  bool descending = true;
};

// Builds a query from URL-style parameters (status=a,b sort= dir= q=).
// Throws std::invalid_argument on unknown values.
LeaderboardQuery parse_leaderboard_query(const std::map<std::string, std::string> &params);

using Clock = std::function<std::string()>;
std::string utc_now();
std::string platform_fingerprint();

// Event-sourced submission store. Every mutation is appended as one JSON
// line (submission_created, evaluation_started, result_attached, reviewed)
// and applied through the same code path replay uses. Writers are
// serialised; readers work on immutable snapshots.
class Registry {
public:
  // Empty path keeps the log in memory only. An existing file is replayed.
  explicit Registry(std::string log_path = {}, Clock clock = utc_now);

  Submission submit(const ModelCard &card);
  Submission start_evaluation(const std::string &id);
  Submission attach_result(const std::string &id, const orchestrate::EvaluationResult &result);
  Submission review(const std::string &id, Decision decision, const std::string &reviewer, const std::string &note);

  Submission get(const std::string &id) const;
  std::vector<Submission> list() const;
  std::vector<Submission> query_leaderboard(const LeaderboardQuery &q) const;

  // Digest of the canonical JSON of every submission.
  std::string state_hash() const;
  std::vector<nlohmann::json> events() const;

  // Rebuilds a registry from event lines (throws on an illegal sequence).
  static std::unique_ptr<Registry> replay(const std::vector<nlohmann::json> &events);

private:
  struct State {
    std::map<std::string, Submission> by_id;
    std::uint64_t next_seq = 1;
    std::vector<nlohmann::json> events;
  };

  Submission commit(nlohmann::json event);
  static void apply(State &s, const nlohmann::json &event);
  std::shared_ptr<const State> snapshot() const;

  std::string log_path_;
  Clock clock_;
  mutable std::mutex mu_;  // guards state_ pointer swaps and the log file
  std::shared_ptr<const State> state_;
};

}  // namespace toxbench::registry
