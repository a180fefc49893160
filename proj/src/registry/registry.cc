// SPDX-License-Identifier: Apache-2.0

#include "toxbench/registry/registry.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>

#include "toxbench/util/binary_io.h"
#include "toxbench/util/hash.h"

namespace toxbench::registry {

namespace {

using nlohmann::json;

struct CardField {
  const char *name;
  std::string ModelCard::*member;
  bool required;
};

const std::vector<CardField> &card_fields() {
  static const std::vector<CardField> fields{
      {"model_name", &ModelCard::model_name, true},
      {"developer", &ModelCard::developer, true},
      {"paper_url", &ModelCard::paper_url, false},
      {"architecture", &ModelCard::architecture, true},
      {"inference_notes", &ModelCard::inference_notes, false},
      {"model_version", &ModelCard::model_version, true},
      {"model_date", &ModelCard::model_date, false},
      {"reproducibility_statement", &ModelCard::reproducibility_statement, false},
      {"intended_use", &ModelCard::intended_use, false},
      {"metric", &ModelCard::metric, false},
      {"training_data", &ModelCard::training_data, false},
      {"evaluation_data", &ModelCard::evaluation_data, false},
      {"space_url", &ModelCard::space_url, true},
      {"commit_hash", &ModelCard::commit_hash, true},
  };
  return fields;
}

std::string lower(std::string s) {
  for (auto &c: s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_id(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sub-%06llu", static_cast<unsigned long long>(seq));
  return buf;
}

Submission &find(std::map<std::string, Submission> &m, const std::string &id) {
  auto it = m.find(id);
  if (it == m.end()) throw NotFound("no submission " + id);
  return it->second;
}

void require(const Submission &s, Status expected, const char *action) {
  if (s.status != expected)
    throw IllegalTransition(std::string(action) + " requires status " + std::string(to_string(expected)) + ", " + s.id +
                            " is " + std::string(to_string(s.status)));
}

}  // namespace

std::vector<ModelCard::FieldError> ModelCard::validate() const {
  std::vector<FieldError> errors;
  for (const auto &f: card_fields())
    if (f.required && (this->*f.member).empty()) errors.push_back({f.name, "required field is missing or empty"});
  static const std::regex kUrl(R"(^https?://[A-Za-z0-9.\-]+(:[0-9]+)?(/\S*)?$)");
  if (!space_url.empty() && !std::regex_match(space_url, kUrl))
    errors.push_back({"space_url", "not a valid http(s) URL"});
  return errors;
}

json ModelCard::to_json() const {
  json j = json::object();
  for (const auto &f: card_fields()) j[f.name] = this->*f.member;
  return j;
}

ModelCard ModelCard::from_json(const json &j, std::vector<FieldError> *errors) {
  ModelCard c;
  std::vector<FieldError> local;
  if (!j.is_object()) {
    local.push_back({"", "model card must be a JSON object"});
  } else {
    for (const auto &[key, value]: j.items()) {
      auto it = std::find_if(card_fields().begin(), card_fields().end(),
                             [&](const CardField &f) { return key == f.name; });
      if (it == card_fields().end()) local.push_back({key, "unknown field"});
      else if (!value.is_string()) local.push_back({key, "must be a string"});
      else c.*(it->member) = value.get<std::string>();
    }
  }
  if (errors) *errors = std::move(local);
  return c;
}

std::string_view to_string(Status s) {
  switch (s) {
  case Status::kPending: return "pending";
  case Status::kEvaluating: return "evaluating";
  case Status::kPreliminary: return "preliminary";
  case Status::kApproved: return "approved";
  case Status::kRejected: return "rejected";
  case Status::kFailed: return "failed";
  }
  return "pending";
}

std::optional<Status> status_from_string(std::string_view s) {
  for (auto st: {Status::kPending, Status::kEvaluating, Status::kPreliminary, Status::kApproved, Status::kRejected,
                 Status::kFailed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

bool is_terminal(Status s) { return s == Status::kApproved || s == Status::kRejected || s == Status::kFailed; }

json ResultRecord::to_json() const {
  return {{"submission_id", submission_id}, {"result", result},         {"dataset_hash", dataset_hash},
          {"platform", platform},           {"created_at", created_at}, {"record_version", record_version},
          {"content_hash", content_hash}};
}

ResultRecord ResultRecord::from_json(const json &j) {
  ResultRecord r;
  r.submission_id = j.at("submission_id").get<std::string>();
  r.result = j.at("result");
  r.dataset_hash = j.value("dataset_hash", "");
  r.platform = j.value("platform", "");
  r.created_at = j.value("created_at", "");
  r.record_version = j.value("record_version", 1);
  r.content_hash = j.value("content_hash", "");
  return r;
}

std::string ResultRecord::compute_hash() const {
  json j = to_json();
  j.erase("content_hash");
  return to_hex(fnv1a(j.dump()));
}

std::optional<double> Submission::mean_auc() const {
  if (!result || !result->result.contains("mean_auc") || !result->result["mean_auc"].is_number()) return std::nullopt;
  return result->result["mean_auc"].get<double>();
}

json Submission::to_json() const {
  json j = {{"id", id},
            {"seq", seq},
            {"card", card.to_json()},
            {"status", std::string(to_string(status))},
            {"result", result ? result->to_json() : json(nullptr)},
            {"reviewer", reviewer},
            {"review_note", review_note},
            {"transitions", transitions}};
  auto m = mean_auc();
  j["mean_auc"] = m ? json(*m) : json(nullptr);
  return j;
}

CardRejected::CardRejected(std::vector<ModelCard::FieldError> errors)
    : std::invalid_argument([&] {
        std::string msg = "model card rejected:";
        for (const auto &e: errors) msg += " " + e.field + " (" + e.message + ");";
        return msg;
      }()),
      errors_(std::move(errors)) {}

LeaderboardQuery parse_leaderboard_query(const std::map<std::string, std::string> &params) {
  LeaderboardQuery q;
  if (auto it = params.find("status"); it != params.end() && !it->second.empty()) {
    q.statuses.clear();
    std::string_view rest = it->second;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto tok = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (tok == "all") {
        for (auto st: {Status::kPending, Status::kEvaluating, Status::kPreliminary, Status::kApproved,
                       Status::kRejected, Status::kFailed})
          q.statuses.insert(st);
        continue;
      }
      auto st = status_from_string(tok);
      if (!st) throw std::invalid_argument("unknown status '" + std::string(tok) + "'");
      q.statuses.insert(*st);
    }
  }
  if (auto it = params.find("sort"); it != params.end() && !it->second.empty()) {
    if (it->second == "mean_auc") q.key = LeaderboardQuery::Key::kMeanAuc;
    else if (it->second == "date") q.key = LeaderboardQuery::Key::kDate;
    else if (it->second == "name") q.key = LeaderboardQuery::Key::kName;
    else throw std::invalid_argument("unknown sort key '" + it->second + "'");
  }
  q.descending = q.key != LeaderboardQuery::Key::kName;
  if (auto it = params.find("dir"); it != params.end() && !it->second.empty()) {
    if (it->second == "asc") q.descending = false;
    else if (it->second == "desc") q.descending = true;
    else throw std::invalid_argument("dir must be asc or desc");
  }
  if (auto it = params.find("q"); it != params.end()) q.text = it->second;
  return q;
}

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string platform_fingerprint() {
  std::string os =
#if defined(__linux__)
      "linux";
#elif defined(__APPLE__)
      "darwin";
#else
      "unknown";
#endif
  std::string arch =
#if defined(__x86_64__)
      "x86_64";
#elif defined(__aarch64__)
      "aarch64";
#else
      "unknown";
#endif
  std::string compiler =
#if defined(__clang__)
      "clang-" + std::to_string(__clang_major__);
#elif defined(__GNUC__)
      "gcc-" + std::to_string(__GNUC__);
#else
      "unknown";
#endif
  return os + "-" + arch + "-" + compiler;
}

Registry::Registry(std::string log_path, Clock clock)
    : log_path_(std::move(log_path)), clock_(std::move(clock)), state_(std::make_shared<State>()) {
  if (log_path_.empty()) return;
  std::ifstream in(log_path_);
  if (!in) return;  // created on first write
  auto s = std::make_shared<State>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      apply(*s, json::parse(line));
    } catch (const std::exception &e) {
      throw std::runtime_error(log_path_ + ":" + std::to_string(line_no) + ": cannot replay event: " + e.what());
    }
  }
  state_ = std::move(s);
}

std::shared_ptr<const Registry::State> Registry::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

void Registry::apply(State &s, const json &event) {
  const auto type = event.at("type").get<std::string>();
  const auto id = event.at("id").get<std::string>();
  const auto at = event.at("at").get<std::string>();
  if (type == "submission_created") {
    if (s.by_id.count(id)) throw IllegalTransition("duplicate submission " + id);
    std::vector<ModelCard::FieldError> errors;
    Submission sub;
    sub.card = ModelCard::from_json(event.at("card"), &errors);
    auto more = sub.card.validate();
    errors.insert(errors.end(), more.begin(), more.end());
    if (!errors.empty()) throw CardRejected(errors);
    sub.id = id;
    sub.seq = s.next_seq++;
    if (format_id(sub.seq) != id) throw IllegalTransition("submission id " + id + " out of sequence");
    sub.transitions["pending"] = at;
    s.by_id.emplace(id, std::move(sub));
  } else if (type == "evaluation_started") {
    auto &sub = find(s.by_id, id);
    require(sub, Status::kPending, "evaluation");
    sub.status = Status::kEvaluating;
    sub.transitions["evaluating"] = at;
  } else if (type == "result_attached") {
    auto &sub = find(s.by_id, id);
    require(sub, Status::kEvaluating, "attaching a result");
    auto record = ResultRecord::from_json(event.at("record"));
    if (record.compute_hash() != record.content_hash) throw IllegalTransition("result record hash mismatch for " + id);
    auto status = orchestrate::status_from_string(record.result.at("status").get<std::string>());
    sub.status = status == orchestrate::Status::kScored     ? Status::kPreliminary
                 : status == orchestrate::Status::kRejected ? Status::kRejected
                                                            : Status::kFailed;
    sub.transitions[std::string(to_string(sub.status))] = at;
    sub.result = std::move(record);
  } else if (type == "reviewed") {
    auto &sub = find(s.by_id, id);
    require(sub, Status::kPreliminary, "review");
    const auto decision = event.at("decision").get<std::string>();
    const auto reviewer = event.at("reviewer").get<std::string>();
    if (reviewer.empty()) throw std::invalid_argument("reviewer must not be empty");
    if (decision == "approve") sub.status = Status::kApproved;
    else if (decision == "reject") sub.status = Status::kRejected;
    else throw std::invalid_argument("decision must be approve or reject");
    sub.reviewer = reviewer;
    sub.review_note = event.value("note", "");
    sub.transitions[std::string(to_string(sub.status))] = at;
  } else {
    throw std::invalid_argument("unknown event type '" + type + "'");
  }
  s.events.push_back(event);
}

Submission Registry::commit(json event) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<State>(*state_);
  event["seq"] = next->events.size() + 1;
  if (!event.contains("at")) event["at"] = clock_();
  const std::string id = event.at("id").get<std::string>();
  apply(*next, event);
  if (!log_path_.empty()) {
    std::ofstream out(log_path_, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append to " + log_path_);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write to " + log_path_ + " failed");
  }
  state_ = next;
  return next->by_id.at(id);
}

Submission Registry::submit(const ModelCard &card) {
  auto errors = card.validate();
  if (!errors.empty()) throw CardRejected(errors);
  std::uint64_t seq;
  {
    std::lock_guard lock(mu_);
    seq = state_->next_seq;
  }
  // The id is re-checked against the sequence inside apply(), so a racing
  // writer makes this fail instead of producing a duplicate.
  return commit({{"type", "submission_created"}, {"id", format_id(seq)}, {"card", card.to_json()}});
}

Submission Registry::start_evaluation(const std::string &id) {
  return commit({{"type", "evaluation_started"}, {"id", id}});
}

Submission Registry::attach_result(const std::string &id, const orchestrate::EvaluationResult &result) {
  ResultRecord r;
  r.submission_id = id;
  r.result = result.to_json();
  r.dataset_hash = result.dataset_hash;
  r.platform = platform_fingerprint();
  r.created_at = clock_();
  r.record_version = 1;
  r.content_hash = r.compute_hash();
  return commit({{"type", "result_attached"}, {"id", id}, {"at", r.created_at}, {"record", r.to_json()}});
}

Submission Registry::review(const std::string &id, Decision decision, const std::string &reviewer,
                            const std::string &note) {
  if (reviewer.empty()) throw std::invalid_argument("reviewer must not be empty");
  return commit({{"type", "reviewed"},
                 {"id", id},
                 {"decision", decision == Decision::kApprove ? "approve" : "reject"},
                 {"reviewer", reviewer},
                 {"note", note}});
}

Submission Registry::get(const std::string &id) const {
  auto s = snapshot();
  auto it = s->by_id.find(id);
  if (it == s->by_id.end()) throw NotFound("no submission " + id);
  return it->second;
}

std::vector<Submission> Registry::list() const {
  auto s = snapshot();
  std::vector<Submission> out;
  for (const auto &[_, sub]: s->by_id) out.push_back(sub);
  return out;
}

std::vector<Submission> Registry::query_leaderboard(const LeaderboardQuery &q) const {
  std::vector<Submission> rows;
  const std::string needle = lower(q.text);
  for (auto &sub: list()) {
    if (!q.statuses.count(sub.status)) continue;
    if (!needle.empty() && lower(sub.card.model_name).find(needle) == std::string::npos &&
        lower(sub.card.developer).find(needle) == std::string::npos)
      continue;
    rows.push_back(std::move(sub));
  }
  auto cmp = [&](const Submission &a, const Submission &b) {
    switch (q.key) {
    case LeaderboardQuery::Key::kMeanAuc: {
      auto ma = a.mean_auc(), mb = b.mean_auc();
      if (ma.has_value() != mb.has_value()) return ma.has_value();  // unscored rows last
      if (ma && *ma != *mb) return q.descending ? *ma > *mb : *ma < *mb;
      break;
    }
    case LeaderboardQuery::Key::kDate: {
      const auto &da = a.transitions.at("pending"), &db = b.transitions.at("pending");
      if (da != db) return q.descending ? da > db : da < db;
      if (a.seq != b.seq) return q.descending ? a.seq > b.seq : a.seq < b.seq;
      break;
    }
    case LeaderboardQuery::Key::kName:
      if (a.card.model_name != b.card.model_name)
        return q.descending ? a.card.model_name > b.card.model_name : a.card.model_name < b.card.model_name;
      break;
    }
    return a.seq < b.seq;  // earlier submission wins ties
  };
  std::sort(rows.begin(), rows.end(), cmp);
  return rows;
}

std::string Registry::state_hash() const {
  auto s = snapshot();
  Fnv1a h;
  for (const auto &[id, sub]: s->by_id) h.add_string(sub.to_json().dump());
  h.add_u64(s->next_seq);
  return to_hex(h.digest());
}

std::vector<json> Registry::events() const { return snapshot()->events; }

std::unique_ptr<Registry> Registry::replay(const std::vector<json> &events) {
  auto r = std::make_unique<Registry>();
  auto s = std::make_shared<State>();
  for (const auto &e: events) apply(*s, e);
  r->state_ = std::move(s);
  return r;
}

}  // namespace toxbench::registry
