// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "oracles.h"
#include "toxbench/models/workflow.h"
#include "toxbench/serve/http_server.h"

using namespace toxbench;
using namespace toxbench::serve;

namespace {

std::shared_ptr<const Predictor> predictor() {
  static const auto p = [] {
    auto split = oracles::synthetic_dataset(80, 0.5, 0.0, 0.1, 4);
    models::TrainRequest req;
    req.linear.epochs = 5;
    req.seed = 2;
    req.name = "serve-test";
    auto x = models::featurize_rows(split.train);
    return std::make_shared<const Predictor>(models::train_artifact(x, split.train, req));
  }();
  return p;
}

struct Running {
  PredictServer server;
  httplib::Client client;
  explicit Running(std::size_t max_batch = 4096)
      : server(predictor(), ServerConfig{"127.0.0.1", 0, max_batch}), client("127.0.0.1", server.start()) {}
};

}  // namespace

TEST(Predictor, FallbackForUnparseable) {
  bool fb = false;
  auto p = predictor()->predict_one("not_a_smiles", &fb);
  EXPECT_TRUE(fb);
  for (double v : p) EXPECT_EQ(v, 0.5);
  p = predictor()->predict_one("CCO", &fb);
  EXPECT_FALSE(fb);
  for (double v : p) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(Predictor(predictor()->artifact(), 1.5), std::invalid_argument);
}

TEST(Predictor, BatchIndependent) {
  auto split = oracles::synthetic_dataset(40, 0.5, 0.0, 0.0, 9);
  protocol::PredictRequest all{split.test.smiles_list()};
  auto whole = predictor()->predict(all);
  for (const auto &s : all.smiles) {
    auto single = predictor()->predict(protocol::PredictRequest{{s}});
    EXPECT_EQ(single.predictions.at(s), whole.predictions.at(s)) << s;
  }
  EXPECT_EQ(predictor()->predict(all).predictions, whole.predictions);
}

TEST(PredictServer, ExampleRequest) {
  Running r;
  auto res = r.client.Post("/predict", R"({"smiles": ["CCO", "c1ccccc1"]})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  auto resp = protocol::decode_response(res->body);
  ASSERT_EQ(resp.predictions.size(), 2u);
  for (const auto &[s, m] : resp.predictions) EXPECT_EQ(m.size(), 12u) << s;
  EXPECT_EQ(resp.model_info.at("name"), "serve-test");
  EXPECT_TRUE(protocol::validate_response(protocol::PredictRequest{{"CCO", "c1ccccc1"}}, resp).ok());
  EXPECT_EQ(res->body, protocol::encode_response(resp));
}

TEST(PredictServer, UnparseableGetsFallbackAndIsCounted) {
  Running r;
  auto res = r.client.Post("/predict", R"({"smiles": ["not_a_smiles", "CCO"]})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  auto resp = protocol::decode_response(res->body);
  for (const auto &[e, v] : resp.predictions.at("not_a_smiles")) EXPECT_EQ(v, 0.5) << e;
  EXPECT_EQ(r.server.fallback_count(), 1u);
  auto m = r.client.Get("/metrics");
  ASSERT_TRUE(m);
  EXPECT_NE(m->body.find("toxbench_fallback_predictions_total 1"), std::string::npos);
  EXPECT_NE(m->body.find("toxbench_predict_requests_total 1"), std::string::npos);
}

TEST(PredictServer, Deterministic) {
  Running r;
  const std::string body = R"({"smiles": ["CC(=O)Oc1ccccc1C(=O)O", "CCN", "Clc1ccccc1"]})";
  auto a = r.client.Post("/predict", body, "application/json");
  auto b = r.client.Post("/predict", body, "application/json");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->body, b->body);
}

TEST(PredictServer, RejectsBadRequests) {
  Running r(2);
  auto over = r.client.Post("/predict", R"({"smiles": ["C", "CC", "CCC"]})", "application/json");
  ASSERT_TRUE(over);
  EXPECT_EQ(over->status, 422);
  auto j = nlohmann::json::parse(over->body);
  EXPECT_EQ(j["error"]["path"], "/smiles");

  for (const char *body : {"{", R"({"smiles": []})", R"({"smiles": [1]})", R"({"smiles": ["C"], "extra": 1})"}) {
    auto res = r.client.Post("/predict", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422) << body;
    EXPECT_TRUE(nlohmann::json::parse(res->body).contains("error")) << body;
  }
}

TEST(PredictServer, Healthz) {
  Running r;
  auto res = r.client.Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["model_info"]["name"], "serve-test");
}
