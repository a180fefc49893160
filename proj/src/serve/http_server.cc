// SPDX-License-Identifier: Apache-2.0

#include "toxbench/serve/http_server.h"

#include <chrono>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

namespace toxbench::serve {

struct PredictServer::Impl {
  httplib::Server server;
};

PredictServer::PredictServer(std::shared_ptr<const Predictor> predictor, ServerConfig cfg)
    : impl_(std::make_unique<Impl>()), predictor_(std::move(predictor)), cfg_(std::move(cfg)) {
  if (!predictor_) throw std::invalid_argument("PredictServer needs a predictor");
  if (cfg_.max_batch == 0) throw std::invalid_argument("max_batch must be >= 1");
  auto &srv = impl_->server;

  srv.Post("/predict", [this](const httplib::Request &req, httplib::Response &res) {
    const auto started = std::chrono::steady_clock::now();
    const auto id = next_request_id_++;
    ++requests_;
    try {
      protocol::PredictRequest pr;
      try {
        pr = protocol::decode_request(req.body);
      } catch (const protocol::DecodeError &e) {
        spdlog::warn("predict request_id={} status=422 path={} message={}", id, e.path(), e.message());
        res.status = 422;
        res.set_content(protocol::encode_error(e.path(), e.message()), "application/json");
        return;
      }
      if (pr.smiles.size() > cfg_.max_batch) {
        res.status = 422;
        res.set_content(protocol::encode_error("/smiles", "batch of " + std::to_string(pr.smiles.size()) +
                                                              " exceeds max_batch " + std::to_string(cfg_.max_batch)),
                        "application/json");
        spdlog::warn("predict request_id={} status=422 batch={} over max_batch", id, pr.smiles.size());
        return;
      }
      std::size_t fallbacks = 0;
      auto resp = predictor_->predict(pr, &fallbacks);
      fallbacks_ += fallbacks;
      if (fallbacks > 0) spdlog::warn("predict request_id={} unparseable_smiles={} fallback applied", id, fallbacks);
      res.status = 200;
      res.set_content(protocol::encode_response(resp), "application/json");
      const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      spdlog::info("predict request_id={} status=200 batch={} latency_ms={:.2f} fallbacks={}", id, pr.smiles.size(),
                   ms, fallbacks);
    } catch (const std::exception &e) {
      spdlog::error("predict request_id={} status=500 error={}", id, e.what());
      res.status = 500;
      res.set_content(protocol::encode_error("", "internal error"), "application/json");
    }
  });

  srv.Get("/healthz", [this](const httplib::Request &, httplib::Response &res) {
    nlohmann::json j = {{"status", "ok"}, {"model_info", predictor_->model_info()}};
    res.set_content(j.dump(), "application/json");
  });

  srv.Get("/metrics", [this](const httplib::Request &, httplib::Response &res) {
    std::string body = "toxbench_predict_requests_total " + std::to_string(requests_.load()) + "\n" +
                       "toxbench_fallback_predictions_total " + std::to_string(fallbacks_.load()) + "\n";
    res.set_content(body, "text/plain; version=0.0.4");
  });
}

PredictServer::~PredictServer() { stop(); }

int PredictServer::bind() {
  auto &srv = impl_->server;
  if (cfg_.port == 0) port_ = srv.bind_to_any_port(cfg_.host);
  else port_ = srv.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
  if (port_ < 0) throw std::runtime_error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  return port_;
}

void PredictServer::serve_forever() {
  spdlog::info("serving model {} {} on {}:{}", predictor_->artifact().name, predictor_->artifact().version,
               cfg_.host, port_);
  impl_->server.listen_after_bind();
}

int PredictServer::start() {
  int p = bind();
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return p;
}

void PredictServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace toxbench::serve
