// SPDX-License-Identifier: Apache-2.0

#include "toxbench/cli/cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "toxbench/featurize/features.h"
#include "toxbench/metrics/metrics.h"
#include "toxbench/models/workflow.h"
#include "toxbench/orchestrate/orchestrate.h"
#include "toxbench/registry/registry_server.h"
#include "toxbench/serve/http_server.h"
#include "toxbench/util/binary_io.h"

namespace toxbench::cli {

namespace {

using nlohmann::json;

// A domain failure with an optional machine-readable payload.
class CommandError: public std::runtime_error {
public:
  explicit CommandError(const std::string &msg, json detail = nullptr)
      : std::runtime_error(msg), detail_(std::move(detail)) {}
  const json &detail() const { return detail_; }

private:
  json detail_;
};

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string log_level = "info";
  bool json_out = false;
};

struct Io {
  std::ostream &out;
  std::ostream &err;
  const Globals &g;

  void emit(const json &doc, const std::string &human) const {
    if (g.json_out) out << doc.dump(2) << '\n';
    else out << human;
  }
};

std::string fmt3(double v) { return metrics::format_auc(v); }

// Registry client over "http://host[:port]".
class RegistryClient {
public:
  explicit RegistryClient(const std::string &url) {
    static const std::regex kUrl(R"(^(http://[^/\s]+)/?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw std::invalid_argument("registry URL must look like http://host:port");
    client_ = std::make_unique<httplib::Client>(m[1].str());
    client_->set_connection_timeout(10);
    client_->set_read_timeout(600);
  }

  json call(const std::string &method, const std::string &path, const std::string &body = {},
            const std::string &token = {}) {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("X-Admin-Token", token);
    httplib::Result r = method == "GET" ? client_->Get(path, headers)
                                        : client_->Post(path, headers, body, "application/json");
    if (!r) throw CommandError("registry unreachable: " + httplib::to_string(r.error()));
    json doc = json::parse(r->body, nullptr, false);
    if (r->status >= 300) {
      std::string msg = "registry answered HTTP " + std::to_string(r->status);
      if (doc.is_object() && doc.contains("error")) msg += ": " + doc["error"].value("message", "");
      throw CommandError(msg, doc.is_discarded() ? json(r->body) : doc);
    }
    if (doc.is_discarded()) throw CommandError("registry sent a non-JSON body");
    return doc;
  }

private:
  std::unique_ptr<httplib::Client> client_;
};

std::string read_text(const std::string &path) { return read_file(path); }

std::string render_rows(const json &rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-12s %-28s %-20s %-12s %8s\n", "#", "id", "model", "developer", "status",
                "mean_auc");
  os << line;
  int rank = 0;
  for (const auto &r: rows) {
    std::string auc = r["mean_auc"].is_number() ? fmt3(r["mean_auc"].get<double>()) : "-";
    std::snprintf(line, sizeof line, "%-4d %-12s %-28s %-20s %-12s %8s\n", ++rank,
                  r.value("id", "").c_str(), r.value("model_name", "").substr(0, 28).c_str(),
                  r.value("developer", "").substr(0, 20).c_str(), r.value("status", "").c_str(), auc.c_str());
    os << line;
  }
  return os.str();
}

json leaderboard_rows(const std::vector<registry::Submission> &subs) {
  json rows = json::array();
  for (const auto &s: subs) {
    auto m = s.mean_auc();
    rows.push_back({{"id", s.id},
                    {"model_name", s.card.model_name},
                    {"developer", s.card.developer},
                    {"model_version", s.card.model_version},
                    {"status", std::string(registry::to_string(s.status))},
                    {"mean_auc", m ? json(*m) : json(nullptr)}});
  }
  return rows;
}

std::string render_result(const orchestrate::EvaluationResult &r) {
  std::ostringstream os;
  os << "status: " << orchestrate::to_string(r.status) << "\n";
  if (r.score) {
    for (const auto &e: r.score->per_endpoint) {
      char line[96];
      std::snprintf(line, sizeof line, "  %-14s %s  (pos %zu, neg %zu)\n", e.endpoint.c_str(), fmt3(e.auc).c_str(),
                    e.n_pos, e.n_neg);
      os << line;
    }
    os << "mean AUC: " << fmt3(r.score->mean_auc) << "\n";
  }
  os << "requests: " << r.request_count << ", molecules: " << r.molecules << " (" << r.unique_molecules
     << " unique)\n";
  if (!r.error.empty()) os << "error: " << r.error << "\n";
  return os.str();
}

void configure_logging(const std::string &level) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("toxbench")); });
  auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off")
    throw CLI::ValidationError("--log-level", "unknown level '" + level + "'");
  spdlog::set_level(lvl);
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Tox21 benchmark toolkit", "toxbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; explicit flags win");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->each([&](const std::string &) { g.seed_given = true; });
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();
  app.add_flag("--json", g.json_out, "Emit one JSON document on stdout");
  Io io{out, err, g};
  std::function<void()> action;

  // featurize
  {
    auto *c = app.add_subcommand("featurize", "Write the raw feature matrix of a dataset");
    auto data = std::make_shared<std::string>(), outp = std::make_shared<std::string>();
    c->add_option("--data", *data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", *outp, "Output matrix file")->required();
    c->callback([&, data, outp] {
      action = [&, data, outp] {
        auto ds = dataset::load_dataset(*data);
        auto x = models::featurize_rows(ds.matrix);
        featurize::write_feature_matrix(*outp, x);
        json doc = {{"out", *outp}, {"rows", x.rows()}, {"cols", x.cols()},
                    {"excluded_rows", ds.report.excluded.size()}, {"layout_hash", featurize::layout_hash()}};
        io.emit(doc, "wrote " + std::to_string(x.rows()) + " x " + std::to_string(x.cols()) + " features to " +
                         *outp + " (" + std::to_string(ds.report.excluded.size()) + " rows excluded)\n");
      };
    });
  }

  // train
  {
    auto *c = app.add_subcommand("train", "Train a model and write an artifact directory");
    struct Opts {
      std::string model = "linear", data, out, name, version = "1";
      models::TrainRequest req;
      double variance = 0.0, correlation = 0.95;
      bool no_variance = false, no_correlation = false, quantize = false, no_normalize = false;
      std::size_t top_k = 0;
      std::optional<double> lr, momentum, l2, dropout;
      std::optional<std::size_t> epochs, batch;
      std::vector<std::size_t> hidden;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--model", o->model, "linear|snn|knn")->check(CLI::IsMember({"linear", "snn", "knn"}))
        ->capture_default_str();
    c->add_option("--data", o->data, "Training CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Artifact directory")->required();
    c->add_option("--name", o->name, "Model name (default: model kind)");
    c->add_option("--version", o->version, "Model version")->capture_default_str();
    c->add_option("--epochs", o->epochs, "Training epochs");
    c->add_option("--lr", o->lr, "Learning rate");
    c->add_option("--momentum", o->momentum, "Momentum");
    c->add_option("--l2", o->l2, "L2 weight penalty");
    c->add_option("--batch-size", o->batch, "Mini-batch size");
    c->add_option("--hidden", o->hidden, "SNN hidden widths")->delimiter(',');
    c->add_option("--dropout", o->dropout, "SNN alpha dropout rate");
    c->add_option("--k", o->req.k, "KNN neighbours")->capture_default_str();
    c->add_option("--variance-threshold", o->variance, "Drop features with variance <= t")->capture_default_str();
    c->add_flag("--no-variance-filter", o->no_variance);
    c->add_option("--correlation-threshold", o->correlation, "Drop features correlated above t")
        ->capture_default_str();
    c->add_flag("--no-correlation-filter", o->no_correlation);
    c->add_flag("--quantize", o->quantize, "Quartile-bin the descriptor block");
    c->add_flag("--no-normalize", o->no_normalize);
    c->add_option("--top-k-variance", o->top_k, "Keep only the k highest-variance features (0 = all)");
    c->callback([&, o] {
      auto &r = o->req;
      r.kind = o->model;
      r.name = o->name.empty() ? o->model : o->name;
      r.version = o->version;
      r.seed = g.seed;
      r.pipeline.variance_threshold = o->no_variance ? std::nullopt : std::optional<double>(o->variance);
      r.pipeline.correlation_threshold = o->no_correlation ? std::nullopt : std::optional<double>(o->correlation);
      r.pipeline.quantize = o->quantize;
      r.pipeline.normalize = !o->no_normalize;
      r.pipeline.top_k_variance = o->top_k ? std::optional<std::size_t>(o->top_k) : std::nullopt;
      auto apply = [&](models::TrainConfig &t) {
        if (o->lr) t.learning_rate = *o->lr;
        if (o->momentum) t.momentum = *o->momentum;
        if (o->l2) t.l2 = *o->l2;
        if (o->epochs) t.epochs = *o->epochs;
        if (o->batch) t.batch_size = *o->batch;
        t.seed = g.seed;
      };
      apply(r.linear);
      apply(r.snn.train);
      if (!o->hidden.empty()) r.snn.hidden = o->hidden;
      if (o->dropout) r.snn.dropout_rate = *o->dropout;
      try {
        r.validate();
        r.pipeline.validate(featurize::FeatureLayout::kTotal);
      } catch (const std::invalid_argument &e) {
        throw CLI::ValidationError("train", e.what());
      }
      action = [&, o] {
        auto ds = dataset::load_dataset(o->data);
        auto x = models::featurize_rows(ds.matrix);
        auto artifact = models::train_artifact(x, ds.matrix, o->req);
        models::save_artifact(o->out, artifact);
        json doc = {{"out", o->out},
                    {"kind", models::model_kind(artifact.model)},
                    {"rows", ds.matrix.rows()},
                    {"features", artifact.pipeline.output_width()},
                    {"pipeline_hash", artifact.pipeline.content_hash()},
                    {"seed", artifact.seed}};
        io.emit(doc, "trained " + models::model_kind(artifact.model) + " on " + std::to_string(ds.matrix.rows()) +
                         " rows, " + std::to_string(artifact.pipeline.output_width()) + " features; wrote " +
                         o->out + "\n");
      };
    });
  }

  // serve
  {
    auto *c = app.add_subcommand("serve", "Serve an artifact over the prediction protocol");
    struct Opts {
      std::string artifact;
      serve::ServerConfig cfg;
      double fallback = 0.5;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--artifact", o->artifact, "Artifact directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--port", o->cfg.port, "Port (0 = any)")->capture_default_str()->check(CLI::Range(0, 65535));
    c->add_option("--host", o->cfg.host, "Bind address")->capture_default_str();
    c->add_option("--max-batch", o->cfg.max_batch, "Largest accepted batch")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--fallback", o->fallback, "Probability for unparseable SMILES")->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    c->callback([&, o] {
      action = [&, o] {
        auto predictor = std::make_shared<serve::Predictor>(models::load_artifact(o->artifact), o->fallback);
        serve::PredictServer server(predictor, o->cfg);
        int port = server.bind();
        if (g.json_out) out << json{{"host", o->cfg.host}, {"port", port}}.dump() << std::endl;
        else out << "listening on http://" << o->cfg.host << ":" << port << std::endl;
        server.serve_forever();
      };
    });
  }

  // eval
  {
    auto *c = app.add_subcommand("eval", "Evaluate a prediction endpoint on a test set");
    struct Opts {
      std::string url, data, out;
      orchestrate::EvaluationJob job;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--url", o->url, "Endpoint base URL")->required();
    c->add_option("--data", o->data, "Test CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Result JSON path")->required();
    c->add_option("--batch-size", o->job.batch_size, "SMILES per request")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--attempts", o->job.retry.max_attempts, "Attempts per batch")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--timeout", o->job.timeout_seconds, "Per-request timeout, seconds")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--max-in-flight", o->job.max_in_flight, "Concurrent requests")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--id", o->job.submission_id, "Submission id recorded in the result");
    c->callback([&, o] {
      std::unique_ptr<orchestrate::Transport> probe;
      try {
        probe = orchestrate::make_http_transport(o->url);
      } catch (const std::invalid_argument &e) {
        throw CLI::ValidationError("--url", e.what());
      }
      action = [&, o] {
        auto ds = dataset::load_dataset(o->data);
        o->job.endpoint_url = o->url;
        o->job.dataset_path = o->data;
        o->job.dataset_hash = ds.content_hash;
        auto transport = orchestrate::make_http_transport(o->url);
        auto result = orchestrate::run_evaluation(o->job, ds.matrix, *transport);
        write_file(o->out, result.to_json().dump(2) + "\n");
        io.emit(result.to_json(), render_result(result));
        if (result.status != orchestrate::Status::kScored)
          throw CommandError("evaluation " + std::string(orchestrate::to_string(result.status)) + ": " +
                             result.error);
      };
    });
  }

  // audit
  {
    auto *c = app.add_subcommand("audit", "Label statistics of one or more dataset files");
    auto data = std::make_shared<std::vector<std::string>>();
    c->add_option("--data", *data, "Dataset CSV (repeatable)")->required()->check(CLI::ExistingFile);
    c->callback([&, data] {
      action = [&, data] {
        std::vector<dataset::SplitAudit> audits;
        json doc = json::array();
        for (const auto &path: *data) {
          auto ds = dataset::load_dataset(path);
          audits.push_back(
              dataset::audit(ds.matrix, std::filesystem::path(path).stem().string(), ds.report.excluded.size()));
          doc.push_back(dataset::audit_to_json(audits.back()));
        }
        io.emit(doc, dataset::render_audit(audits));
      };
    });
  }

  // registry-serve
  {
    auto *c = app.add_subcommand("registry-serve", "Run the submission registry HTTP API");
    struct Opts {
      std::string store, test_data;
      registry::RegistryServerConfig cfg;
      std::size_t batch = 64;
    };
    auto o = std::make_shared<Opts>();
    o->cfg.port = 8080;
    c->add_option("--store", o->store, "Event log (JSONL)")->required();
    c->add_option("--port", o->cfg.port, "Port (0 = any)")->capture_default_str()->check(CLI::Range(0, 65535));
    c->add_option("--host", o->cfg.host, "Bind address")->capture_default_str();
    c->add_option("--ui", o->cfg.ui_dir, "Static directory mounted at /ui")->check(CLI::ExistingDirectory);
    c->add_option("--test-data", o->test_data, "Test CSV enabling server-side evaluation")
        ->check(CLI::ExistingFile);
    c->add_option("--batch-size", o->batch, "Evaluation batch size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->callback([&, o] {
      action = [&, o] {
        o->cfg.admin_token = registry::admin_token_from_env();
        if (o->cfg.admin_token.empty()) spdlog::warn("TOXBENCH_ADMIN_TOKEN is not set; admin routes are disabled");
        if (!o->test_data.empty()) {
          registry::EvaluationSetup ev;
          ev.data = dataset::load_dataset(o->test_data).matrix;
          ev.dataset_path = o->test_data;
          ev.batch_size = o->batch;
          o->cfg.evaluation = std::move(ev);
        }
        auto reg = std::make_shared<registry::Registry>(o->store);
        registry::RegistryServer server(reg, o->cfg);
        int port = server.bind();
        if (g.json_out) out << json{{"host", o->cfg.host}, {"port", port}}.dump() << std::endl;
        else out << "registry listening on http://" << o->cfg.host << ":" << port << std::endl;
        server.serve_forever();
      };
    });
  }

  // submit
  {
    auto *c = app.add_subcommand("submit", "Submit a model card to a registry");
    auto card = std::make_shared<std::string>(), url = std::make_shared<std::string>();
    c->add_option("--card", *card, "Model card JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--registry", *url, "Registry base URL")->required();
    c->callback([&, card, url] {
      action = [&, card, url] {
        json body = json::parse(read_text(*card));
        auto doc = RegistryClient(*url).call("POST", "/submissions", body.dump());
        io.emit(doc, "submitted " + doc.value("id", "") + " (" + doc.value("status", "") + ")\n");
      };
    });
  }

  // review
  {
    auto *c = app.add_subcommand("review", "Approve or reject a preliminary submission");
    struct Opts {
      std::string id, decision, reviewer, note, url, store, token;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--id", o->id, "Submission id")->required();
    c->add_option("--decision", o->decision, "approve|reject")->required()->check(CLI::IsMember({"approve", "reject"}));
    c->add_option("--reviewer", o->reviewer, "Reviewer name")->default_val("admin");
    c->add_option("--note", o->note, "Review note");
    auto *u = c->add_option("--registry", o->url, "Registry base URL");
    auto *s = c->add_option("--store", o->store, "Edit an event log directly");
    u->excludes(s);
    c->add_option("--admin-token", o->token, "Admin token (default: $TOXBENCH_ADMIN_TOKEN)");
    c->callback([&, o, u, s] {
      if (u->count() + s->count() != 1) throw CLI::ValidationError("review", "give exactly one of --registry or --store");
      action = [&, o] {
        json doc;
        if (!o->store.empty()) {
          registry::Registry reg(o->store);
          doc = reg.review(o->id, o->decision == "approve" ? registry::Decision::kApprove : registry::Decision::kReject,
                           o->reviewer, o->note)
                    .to_json();
        } else {
          std::string token = o->token.empty() ? registry::admin_token_from_env() : o->token;
          json body = {{"decision", o->decision}, {"reviewer", o->reviewer}, {"note", o->note}};
          doc = RegistryClient(o->url).call("POST", "/submissions/" + o->id + "/review", body.dump(), token);
        }
        io.emit(doc, o->id + " is now " + doc.value("status", "") + "\n");
      };
    });
  }

  // leaderboard
  {
    auto *c = app.add_subcommand("leaderboard", "Print leaderboard rows");
    struct Opts {
      std::string url, store, sort = "mean_auc", dir, status, q, token;
    };
    auto o = std::make_shared<Opts>();
    auto *u = c->add_option("--registry", o->url, "Registry base URL");
    auto *s = c->add_option("--store", o->store, "Read an event log directly");
    u->excludes(s);
    c->add_option("--sort", o->sort, "mean_auc|date|name")->capture_default_str()
        ->check(CLI::IsMember({"mean_auc", "date", "name"}));
    c->add_option("--dir", o->dir, "asc|desc")->check(CLI::IsMember({"asc", "desc"}));
    c->add_option("--status", o->status, "Comma-separated statuses or 'all' (admin)");
    c->add_option("--q", o->q, "Filter by model name or developer");
    c->add_option("--admin-token", o->token, "Admin token (default: $TOXBENCH_ADMIN_TOKEN)");
    c->callback([&, o, u, s] {
      if (u->count() + s->count() != 1)
        throw CLI::ValidationError("leaderboard", "give exactly one of --registry or --store");
      action = [&, o] {
        json rows;
        std::map<std::string, std::string> params{{"sort", o->sort}};
        if (!o->dir.empty()) params["dir"] = o->dir;
        if (!o->status.empty()) params["status"] = o->status;
        if (!o->q.empty()) params["q"] = o->q;
        if (!o->store.empty()) {
          registry::Registry reg(o->store);
          rows = leaderboard_rows(reg.query_leaderboard(registry::parse_leaderboard_query(params)));
        } else {
          std::string path = "/leaderboard?";
          for (const auto &[k, v]: params) path += k + "=" + httplib::detail::encode_query_param(v) + "&";
          path.pop_back();
          std::string token = o->token.empty() ? registry::admin_token_from_env() : o->token;
          rows = RegistryClient(o->url).call("GET", path, {}, token).at("rows");
        }
        io.emit(json{{"rows", rows}}, render_rows(rows));
      };
    });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    configure_logging(g.log_level);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "toxbench: usage error: " << e.what() << "\n";
    if (auto *sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << "run 'toxbench " << sub->get_name() << " --help' for usage\n";
    else err << "run 'toxbench --help' for usage\n";
    return kUsageError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    action();
    return kOk;
  } catch (const std::exception &e) {
    json doc = {{"error", {{"command", command}, {"message", e.what()}}}};
    if (auto *ce = dynamic_cast<const CommandError *>(&e); ce && !ce->detail().is_null())
      doc["error"]["detail"] = ce->detail();
    if (g.json_out) err << doc.dump() << "\n";
    else err << "toxbench " << command << ": error: " << e.what() << "\n";
    return kDomainError;
  }
}

int run(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace toxbench::cli
