// SPDX-License-Identifier: Apache-2.0

#include <mutex>

#include <gtest/gtest.h>

#include "oracles.h"
#include "toxbench/orchestrate/orchestrate.h"
#include "toxbench/util/hash.h"

using namespace toxbench;
using namespace toxbench::orchestrate;

namespace {

std::vector<std::string> numbered(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("C" + std::string(i % 7, 'C') + "O" + std::to_string(i));
  return out;
}

// Scores are a pure function of (smiles, endpoint), like a well-behaved model.
double pseudo_score(const std::string &smiles, std::string_view endpoint) {
  auto h = fnv1a(smiles + "|" + std::string(endpoint));
  return static_cast<double>(h % 1000003) / 1000003.0;
}

class FakeModel: public Transport {
public:
  std::function<void(protocol::PredictResponse &)> tamper;
  std::vector<int> scripted_status;  // consumed one per call before answering normally
  bool throw_transport = false;
  std::size_t calls = 0;
  std::vector<std::size_t> batch_sizes;

  TransportResponse post_predict(const std::string &body, double) override {
    std::lock_guard lock(mu_);
    ++calls;
    if (throw_transport) throw TransportError("connection refused");
    if (!scripted_status.empty()) {
      int s = scripted_status.front();
      scripted_status.erase(scripted_status.begin());
      if (s != 200) return {s, "{\"error\":{\"message\":\"scripted\",\"path\":\"\"}}"};
    }
    auto req = protocol::decode_request(body);
    batch_sizes.push_back(req.smiles.size());
    protocol::PredictResponse resp;
    resp.model_info = {{"name", "fake"}, {"version", "0"}};
    for (const auto &s: req.smiles)
      for (const auto &e: dataset::endpoints()) resp.predictions[s][std::string(e.name)] = pseudo_score(s, e.name);
    if (tamper) tamper(resp);
    return {200, protocol::encode_response(resp)};
  }

private:
  std::mutex mu_;
};

struct SleepLog {
  std::mutex mu;
  std::vector<double> waits;
  Sleeper sleeper() {
    return [this](double s) {
      std::lock_guard lock(mu);
      waits.push_back(s);
    };
  }
};

const dataset::LabelMatrix &data() {
  static const auto d = oracles::synthetic_dataset(120, 0.5, 0.0, 0.1, 11).test;
  return d;
}

EvaluationJob job(std::size_t batch = 16) {
  EvaluationJob j;
  j.submission_id = "sub-test";
  j.endpoint_url = "http://fake";
  j.batch_size = batch;
  j.max_in_flight = 1;
  return j;
}

}  // namespace

TEST(Batching, PlanCoversEverythingInOrder) {
  auto b = plan_batches(numbered(647), 64);
  ASSERT_EQ(b.size(), 11u);
  EXPECT_EQ(b.back().size(), 7u);
  auto c = plan_batches(numbered(645), 64);
  ASSERT_EQ(c.size(), 11u);
  EXPECT_EQ(c.back().size(), 5u);
  std::vector<std::string> flat;
  for (auto &x: b) flat.insert(flat.end(), x.begin(), x.end());
  EXPECT_EQ(flat, numbered(647));
  EXPECT_EQ(plan_batches(numbered(64), 64).size(), 1u);
  EXPECT_THROW(plan_batches(numbered(3), 0), std::invalid_argument);
}

TEST(Batching, DedupeKeepsFirstOccurrence) {
  EXPECT_EQ(dedupe({"B", "A", "B", "C", "A"}), (std::vector<std::string>{"B", "A", "C"}));
}

TEST(Retry, BackoffSchedule) {
  RetryPolicy p;
  EXPECT_EQ(p.backoff_before(2), 1.0);
  EXPECT_EQ(p.backoff_before(3), 2.0);
  EXPECT_EQ(p.backoff_before(4), 4.0);
}

TEST(Evaluation, ScoresAWellBehavedModel) {
  FakeModel fake;
  SleepLog sleeps;
  auto r = run_evaluation(job(), data(), fake, sleeps.sleeper());
  ASSERT_EQ(r.status, Status::kScored) << r.error;
  ASSERT_TRUE(r.score);
  EXPECT_EQ(r.score->per_endpoint.size(), 12u);
  EXPECT_EQ(r.molecules, data().rows());
  EXPECT_EQ(r.unique_molecules, dedupe(data().smiles_list()).size());
  EXPECT_EQ(r.request_count, (r.unique_molecules + 15) / 16);
  EXPECT_TRUE(sleeps.waits.empty());
  for (auto n: fake.batch_sizes) EXPECT_LE(n, 16u);
}

TEST(Evaluation, BatchSizeDoesNotChangeScores) {
  FakeModel a, b, c;
  auto one = run_evaluation(job(1), data(), a, SleepLog{}.sleeper());
  auto big = run_evaluation(job(64), data(), b, SleepLog{}.sleeper());
  auto j = job(7);
  j.max_in_flight = 4;
  auto par = run_evaluation(j, data(), c, [](double) {});
  ASSERT_EQ(one.status, Status::kScored);
  ASSERT_EQ(big.status, Status::kScored);
  ASSERT_EQ(par.status, Status::kScored);
  EXPECT_EQ(one.score->mean_auc, big.score->mean_auc);
  EXPECT_EQ(one.score->mean_auc, par.score->mean_auc);
  for (std::size_t e = 0; e < 12; ++e) EXPECT_EQ(one.score->per_endpoint[e].auc, big.score->per_endpoint[e].auc);
  EXPECT_EQ(one.request_count, one.unique_molecules);
}

TEST(Evaluation, MissingPairIsRejected) {
  FakeModel fake;
  fake.tamper = [](protocol::PredictResponse &r) {
    if (!r.predictions.empty()) r.predictions.begin()->second.erase("SR-p53");
  };
  auto r = run_evaluation(job(), data(), fake, SleepLog{}.sleeper());
  EXPECT_EQ(r.status, Status::kRejected);
  EXPECT_FALSE(r.score);
  EXPECT_GE(r.validation.count(protocol::ViolationKind::kMissingTarget), 1u);
}

TEST(Evaluation, OutOfRangeIsRejected) {
  FakeModel fake;
  fake.tamper = [](protocol::PredictResponse &r) { r.predictions.begin()->second["NR-AR"] = 1.5; };
  auto r = run_evaluation(job(), data(), fake, SleepLog{}.sleeper());
  EXPECT_EQ(r.status, Status::kRejected);
  EXPECT_GE(r.validation.count(protocol::ViolationKind::kOutOfRange), 1u);
}

TEST(Evaluation, ServerErrorsRetryThenFail) {
  FakeModel fake;
  fake.scripted_status = {503, 502, 500};
  SleepLog sleeps;
  auto r = run_evaluation(job(), data(), fake, sleeps.sleeper());
  EXPECT_EQ(r.status, Status::kFailed);
  EXPECT_EQ(r.batches[0].attempts, 3u);
  EXPECT_EQ(sleeps.waits, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(r.backoff_schedule(), (std::vector<double>{1.0, 2.0}));
  EXPECT_NE(r.error.find("3 attempt"), std::string::npos);
}

TEST(Evaluation, TransientErrorRecovers) {
  FakeModel fake;
  fake.scripted_status = {503};
  SleepLog sleeps;
  auto r = run_evaluation(job(), data(), fake, sleeps.sleeper());
  EXPECT_EQ(r.status, Status::kScored) << r.error;
  EXPECT_EQ(sleeps.waits, (std::vector<double>{1.0}));
  EXPECT_EQ(r.batches[0].attempts, 2u);
}

TEST(Evaluation, TransportErrorsFail) {
  FakeModel fake;
  fake.throw_transport = true;
  SleepLog sleeps;
  auto r = run_evaluation(job(), data(), fake, sleeps.sleeper());
  EXPECT_EQ(r.status, Status::kFailed);
  EXPECT_EQ(fake.calls, 3u);
  EXPECT_EQ(sleeps.waits, (std::vector<double>{1.0, 2.0}));
}

TEST(Evaluation, ClientErrorIsNotRetried) {
  FakeModel fake;
  fake.scripted_status = {422};
  SleepLog sleeps;
  auto r = run_evaluation(job(), data(), fake, sleeps.sleeper());
  EXPECT_EQ(r.status, Status::kFailed);
  EXPECT_EQ(fake.calls, 1u);
  EXPECT_TRUE(sleeps.waits.empty());
}

TEST(Evaluation, MalformedBodyIsRejected) {
  class Garbage: public Transport {
    TransportResponse post_predict(const std::string &, double) override { return {200, "not json"}; }
  } g;
  auto r = run_evaluation(job(), data(), g, SleepLog{}.sleeper());
  EXPECT_EQ(r.status, Status::kRejected);
  EXPECT_GE(r.validation.count(protocol::ViolationKind::kMalformed), 1u);
}

TEST(Evaluation, JobValidation) {
  FakeModel fake;
  auto j = job(0);
  EXPECT_THROW(run_evaluation(j, data(), fake), std::invalid_argument);
  j = job();
  j.retry.max_attempts = 0;
  EXPECT_THROW(run_evaluation(j, data(), fake), std::invalid_argument);
  EXPECT_THROW(run_evaluation(job(), dataset::LabelMatrix{}, fake), std::invalid_argument);
  EXPECT_THROW(make_http_transport("ftp://x"), std::invalid_argument);
}

TEST(Evaluation, ResultJsonRoundTrip) {
  FakeModel fake;
  fake.scripted_status = {500};
  auto r = run_evaluation(job(), data(), fake, SleepLog{}.sleeper());
  auto back = EvaluationResult::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.status, Status::kScored);
  EXPECT_EQ(back.score->mean_auc, r.score->mean_auc);
  EXPECT_EQ(back.backoff_schedule(), r.backoff_schedule());

  FakeModel bad;
  bad.tamper = [](protocol::PredictResponse &p) { p.predictions.begin()->second["NR-AR"] = -1; };
  auto rej = run_evaluation(job(), data(), bad, SleepLog{}.sleeper());
  EXPECT_EQ(EvaluationResult::from_json(rej.to_json()).to_json(), rej.to_json());
}

TEST(Rerun, AggregatesOnlyWhenAllScored) {
  std::vector<EvaluationJob> jobs;
  for (int i = 0; i < 3; ++i) {
    auto j = job();
    j.endpoint_url = "http://run" + std::to_string(i);
    jobs.push_back(j);
  }
  auto factory = [](const std::string &) { return std::make_unique<FakeModel>(); };
  auto ok = rerun_protocol(jobs, data(), factory, [](double) {});
  ASSERT_TRUE(ok.aggregate) << ok.error;
  EXPECT_EQ(ok.runs.size(), 3u);
  EXPECT_EQ(ok.aggregate->mad, 0.0);
  EXPECT_EQ(ok.aggregate->median, ok.runs[0].score->mean_auc);

  auto flaky = [](const std::string &url) {
    auto f = std::make_unique<FakeModel>();
    if (url == "http://run1") f->throw_transport = true;
    return f;
  };
  auto bad = rerun_protocol(jobs, data(), flaky, [](double) {});
  EXPECT_FALSE(bad.aggregate);
  EXPECT_NE(bad.error.find("run 1"), std::string::npos);
  EXPECT_EQ(bad.runs[1].status, Status::kFailed);
  EXPECT_THROW(rerun_protocol({}, data(), factory), std::invalid_argument);
}
