// SPDX-License-Identifier: Apache-2.0

#include "toxbench/registry/registry_server.h"

#include <cstdlib>
#include <map>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

namespace toxbench::registry {

namespace {

using nlohmann::json;

void send(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response &res, int status, const std::string &message, json extra = json::object()) {
  json err = {{"message", message}};
  for (auto &[k, v]: extra.items()) err[k] = v;
  send(res, status, {{"error", err}});
}

json field_errors(const std::vector<ModelCard::FieldError> &errors) {
  json out = json::array();
  for (const auto &e: errors) out.push_back({{"field", e.field}, {"message", e.message}});
  return out;
}

json leaderboard_row(const Submission &s) {
  json per = json::array();
  if (s.result && s.result->result.contains("per_endpoint")) per = s.result->result["per_endpoint"];
  auto m = s.mean_auc();
  return {{"id", s.id},
          {"model_name", s.card.model_name},
          {"developer", s.card.developer},
          {"model_version", s.card.model_version},
          {"architecture", s.card.architecture},
          {"paper_url", s.card.paper_url},
          {"space_url", s.card.space_url},
          {"status", std::string(to_string(s.status))},
          {"submitted_at", s.transitions.count("pending") ? s.transitions.at("pending") : ""},
          {"mean_auc", m ? json(*m) : json(nullptr)},
          {"per_endpoint", per}};
}

// Maps registry exceptions to status codes; anything else is a 500 with an
// opaque body.
template <class F>
void guarded(httplib::Response &res, const char *route, F &&f) {
  try {
    f();
  } catch (const CardRejected &e) {
    send_error(res, 422, "model card rejected", {{"fields", field_errors(e.errors())}});
  } catch (const NotFound &e) {
    send_error(res, 404, e.what());
  } catch (const IllegalTransition &e) {
    send_error(res, 409, e.what());
  } catch (const json::exception &e) {
    send_error(res, 400, std::string("bad request body: ") + e.what());
  } catch (const std::invalid_argument &e) {
    send_error(res, 400, e.what());
  } catch (const std::exception &e) {
    spdlog::error("registry {} error={}", route, e.what());
    send_error(res, 500, "internal error");
  }
}

}  // namespace

std::string admin_token_from_env() {
  const char *t = std::getenv("TOXBENCH_ADMIN_TOKEN");
  return t ? t : "";
}

struct RegistryServer::Impl {
  httplib::Server server;
};

RegistryServer::RegistryServer(std::shared_ptr<Registry> registry, RegistryServerConfig cfg)
    : impl_(std::make_unique<Impl>()), registry_(std::move(registry)), cfg_(std::move(cfg)) {
  if (!registry_) throw std::invalid_argument("RegistryServer needs a registry");
  auto &srv = impl_->server;

  auto is_admin = [this](const httplib::Request &req) {
    return !cfg_.admin_token.empty() && req.get_header_value("X-Admin-Token") == cfg_.admin_token;
  };
  auto deny = [](httplib::Response &res) { send_error(res, 403, "admin token required"); };

  srv.Get("/healthz", [](const httplib::Request &, httplib::Response &res) { send(res, 200, {{"status", "ok"}}); });

  srv.Post("/submissions", [this](const httplib::Request &req, httplib::Response &res) {
    guarded(res, "submit", [&] {
      json body = json::parse(req.body);
      std::vector<ModelCard::FieldError> errors;
      auto card = ModelCard::from_json(body, &errors);
      auto more = card.validate();
      errors.insert(errors.end(), more.begin(), more.end());
      if (!errors.empty()) throw CardRejected(errors);
      auto sub = registry_->submit(card);
      spdlog::info("registry submit id={} model={}", sub.id, sub.card.model_name);
      send(res, 201, {{"id", sub.id}, {"status", std::string(to_string(sub.status))}});
    });
  });

  srv.Get("/submissions", [this, is_admin, deny](const httplib::Request &req, httplib::Response &res) {
    if (!is_admin(req)) return deny(res);
    guarded(res, "list", [&] {
      json rows = json::array();
      for (const auto &s: registry_->list()) rows.push_back(s.to_json());
      send(res, 200, {{"submissions", rows}});
    });
  });

  srv.Get(R"(/submissions/([A-Za-z0-9\-]+))", [this](const httplib::Request &req, httplib::Response &res) {
    guarded(res, "get", [&] { send(res, 200, registry_->get(req.matches[1]).to_json()); });
  });

  srv.Post(R"(/submissions/([A-Za-z0-9\-]+)/review)",
           [this, is_admin, deny](const httplib::Request &req, httplib::Response &res) {
             if (!is_admin(req)) return deny(res);
             guarded(res, "review", [&] {
               json body = json::parse(req.body);
               const auto decision = body.at("decision").get<std::string>();
               Decision d;
               if (decision == "approve") d = Decision::kApprove;
               else if (decision == "reject") d = Decision::kReject;
               else throw std::invalid_argument("decision must be approve or reject");
               auto sub = registry_->review(req.matches[1], d, body.at("reviewer").get<std::string>(),
                                            body.value("note", ""));
               spdlog::info("registry review id={} decision={} reviewer={}", sub.id, decision, sub.reviewer);
               send(res, 200, sub.to_json());
             });
           });

  srv.Post(R"(/submissions/([A-Za-z0-9\-]+)/result)",
           [this, is_admin, deny](const httplib::Request &req, httplib::Response &res) {
             if (!is_admin(req)) return deny(res);
             guarded(res, "result", [&] {
               const std::string id = req.matches[1];
               auto result = orchestrate::EvaluationResult::from_json(json::parse(req.body));
               result.submission_id = id;
               if (registry_->get(id).status == Status::kPending) registry_->start_evaluation(id);
               send(res, 200, registry_->attach_result(id, result).to_json());
             });
           });

  srv.Post(R"(/submissions/([A-Za-z0-9\-]+)/evaluate)",
           [this, is_admin, deny](const httplib::Request &req, httplib::Response &res) {
             if (!is_admin(req)) return deny(res);
             if (!cfg_.evaluation) return send_error(res, 503, "server has no evaluation data configured");
             guarded(res, "evaluate", [&] {
               const std::string id = req.matches[1];
               auto sub = registry_->get(id);
               std::string url = sub.card.space_url;
               if (!req.body.empty()) url = json::parse(req.body).value("endpoint_url", url);
               registry_->start_evaluation(id);
               const auto &ev = *cfg_.evaluation;
               orchestrate::EvaluationJob job;
               job.submission_id = id;
               job.endpoint_url = url;
               job.batch_size = ev.batch_size;
               job.retry = ev.retry;
               job.dataset_path = ev.dataset_path;
               orchestrate::EvaluationResult result;
               try {
                 auto transport = ev.transport(url);
                 result = orchestrate::run_evaluation(job, ev.data, *transport, ev.sleep);
               } catch (const std::exception &e) {
                 result.submission_id = id;
                 result.status = orchestrate::Status::kFailed;
                 result.error = e.what();
               }
               spdlog::info("registry evaluate id={} status={} error={}", id, to_string(result.status), result.error);
               send(res, 200, registry_->attach_result(id, result).to_json());
             });
           });

  srv.Get("/leaderboard", [this, is_admin, deny](const httplib::Request &req, httplib::Response &res) {
    guarded(res, "leaderboard", [&] {
      std::map<std::string, std::string> params;
      for (const auto &[k, v]: req.params) params[k] = v;
      auto q = parse_leaderboard_query(params);
      if (!is_admin(req) && q.statuses != std::set<Status>{Status::kApproved}) return deny(res);
      json rows = json::array();
      for (const auto &s: registry_->query_leaderboard(q)) rows.push_back(leaderboard_row(s));
      send(res, 200, {{"rows", rows}});
    });
  });

  if (!cfg_.ui_dir.empty() && !srv.set_mount_point("/ui", cfg_.ui_dir))
    throw std::runtime_error("cannot mount ui directory " + cfg_.ui_dir);
}

RegistryServer::~RegistryServer() { stop(); }

int RegistryServer::bind() {
  auto &srv = impl_->server;
  if (cfg_.port == 0) port_ = srv.bind_to_any_port(cfg_.host);
  else port_ = srv.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
  if (port_ < 0) throw std::runtime_error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  return port_;
}

void RegistryServer::serve_forever() {
  spdlog::info("registry listening on {}:{}", cfg_.host, port_);
  impl_->server.listen_after_bind();
}

int RegistryServer::start() {
  int p = bind();
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return p;
}

void RegistryServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace toxbench::registry
