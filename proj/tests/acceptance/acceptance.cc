// SPDX-License-Identifier: Apache-2.0
//
// Runs every primary acceptance criterion at its stated tolerance and prints
// one PASS / FAIL / SKIP line per criterion. Exit status is 1 if anything
// failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.h"
#include "toxbench/chem/smiles.h"
#include "toxbench/dataset/dataset.h"
#include "toxbench/featurize/features.h"
#include "toxbench/featurize/pattern.h"
#include "toxbench/metrics/metrics.h"
#include "toxbench/models/loss.h"
#include "toxbench/models/snn.h"
#include "toxbench/models/workflow.h"
#include "toxbench/orchestrate/orchestrate.h"
#include "toxbench/protocol/protocol.h"
#include "toxbench/registry/registry.h"
#include "toxbench/serve/http_server.h"

using namespace toxbench;
namespace oracle = toxbench::oracles;

namespace {

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind = kPass;
  std::string detail;
};

Outcome pass(std::string d = {}) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

dataset::LabelMatrix random_truth(std::size_t rows, double present, std::mt19937_64 &rng) {
  dataset::LabelMatrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    dataset::LabelRow row;
    for (auto &c: row)
      if (std::bernoulli_distribution(present)(rng)) c = std::bernoulli_distribution(0.4)(rng) ? 1 : 0;
    m.add_row("r" + std::to_string(r), "C", row);
  }
  return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64 &rng, double sd = 1.0) {
  std::normal_distribution<double> n(0, sd);
  Matrix m(rows, cols);
  for (auto &x: m.data()) x = n(rng);
  return m;
}

// ---------------------------------------------------------------------------

Outcome auc_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    std::vector<int> ilabels(n);
    // Coarse score grid so ties are common.
    int levels = std::uniform_int_distribution<int>(1, 10)(rng);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = std::uniform_int_distribution<int>(0, levels)(rng) / static_cast<double>(levels);
      labels[k] = std::bernoulli_distribution(0.4)(rng);
    }
    labels[0] = 1;
    labels[1] = 0;
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t k = 0; k < n; ++k) ilabels[k] = labels[k];
    double got = metrics::roc_auc(scores, labels);
    double want = oracle::brute_force_auc(scores, ilabels);
    worst = std::max(worst, std::abs(got - want));
  }
  double t = seconds_since(start);
  auto d = fmt("max |delta| %.3g over 1000 instances in %.3f s", worst, t);
  return worst <= 1e-12 && t < 5.0 ? pass(d) : fail(d);
}

Outcome hand_aucs() {
  using V = std::vector<double>;
  using L = std::vector<std::uint8_t>;
  double a = metrics::roc_auc(V{0.9, 0.1}, L{1, 0});
  double b = metrics::roc_auc(V{0.8, 0.8, 0.6, 0.2}, L{1, 0, 1, 0});
  double c = metrics::roc_auc(V{0.3, 0.3, 0.3, 0.3, 0.3}, L{1, 0, 0, 1, 0});
  auto d = fmt("%.17g %.17g %.17g", a, b, c);
  return a == 1.0 && b == 0.625 && c == 0.5 ? pass(d) : fail(d);
}

Outcome masked_metamorphism() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  int done = 0, attempts = 0;
  while (done < 100 && attempts < 1000) {
    ++attempts;
    auto truth = random_truth(60, 0.6, rng);
    Matrix p(60, dataset::kEndpointCount);
    for (auto &x: p.data()) x = u(rng);
    metrics::RunScore base;
    try {
      base = metrics::score_run(p, truth);
    } catch (const metrics::UndefinedAuc &) {
      continue;
    }
    Matrix q = p;
    for (std::size_t r = 0; r < 60; ++r)
      for (std::size_t e = 0; e < dataset::kEndpointCount; ++e)
        if (!truth.present(r, e)) q(r, e) = u(rng);
    auto again = metrics::score_run(q, truth);
    for (std::size_t e = 0; e < dataset::kEndpointCount; ++e)
      if (again.per_endpoint[e].auc != base.per_endpoint[e].auc)
        return fail(fmt("mask %d endpoint %zu: %.17g vs %.17g", done, e, base.per_endpoint[e].auc,
                        again.per_endpoint[e].auc));
    ++done;
  }
  return done == 100 ? pass("100 masks, per-endpoint AUCs unchanged") : fail("could not generate 100 masks");
}

// Relative error with a denominator floor of 1e-6 for entries that are
// themselves near zero.
Outcome gradient_checks() {
  constexpr double kTol = 1e-4, kFloor = 1e-6;
  std::mt19937_64 rng(31);
  double worst_bce = 0, worst_snn = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto truth = random_truth(4, 0.6, rng);
    auto z = random_matrix(4, 12, rng, 2.0);
    auto r = models::masked_bce(z, truth);
    auto f = [&](const std::vector<double> &v) {
      Matrix m(4, 12);
      std::copy(v.begin(), v.end(), m.data().begin());
      return models::masked_bce(m, truth).loss;
    };
    auto fd = oracle::numeric_gradient(f, {z.data().begin(), z.data().end()}, 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i)
      worst_bce = std::max(worst_bce, oracle::relative_error(r.grad.data()[i], fd[i], kFloor));
  }
  for (int trial = 0; trial < 50; ++trial) {
    auto model = models::SnnModel::initialize({6, 5, 4, 12}, trial % 2 ? 0.1 : 0.0, 100 + trial);
    auto x = random_matrix(3, 6, rng);
    auto truth = random_truth(3, 0.7, rng);
    std::vector<std::size_t> rows{0, 1, 2};
    std::optional<std::uint64_t> seed;
    if (trial % 2) seed = 1000 + trial;
    auto g = models::snn_gradient(model, x, truth, rows, 1e-3, seed);
    auto f = [&](const std::vector<double> &p) {
      auto m = model;
      m.set_flat_parameters(p);
      return models::snn_gradient(m, x, truth, rows, 1e-3, seed).loss;
    };
    auto fd = oracle::numeric_gradient(f, model.flat_parameters(), 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i)
      worst_snn = std::max(worst_snn, oracle::relative_error(g.grad[i], fd[i], kFloor));
  }
  auto d = fmt("max relative error masked_bce %.3g, snn %.3g (50 instances each)", worst_bce, worst_snn);
  return worst_bce <= kTol && worst_snn <= kTol ? pass(d) : fail(d);
}

Outcome selu_self_normalization() {
  std::mt19937_64 rng(5);
  auto x = random_matrix(1024, 128, rng, 3.0);
  for (std::size_t c = 0; c < 128; ++c) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < 1024; ++r) mean += x(r, c);
    mean /= 1024;
    for (std::size_t r = 0; r < 1024; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    double sd = std::sqrt(var / 1024);
    for (std::size_t r = 0; r < 1024; ++r) x(r, c) = (x(r, c) - mean) / sd;
  }
  auto model = models::SnnModel::initialize({128, 128, 128, 128, 128, 128, 12}, 0.0, 17);
  auto acts = model.hidden_activations(x);
  if (acts.size() != 5) return fail(fmt("%zu hidden layers", acts.size()));
  std::ostringstream d;
  bool ok = true;
  for (const auto &a: acts) {
    double mean = std::accumulate(a.data().begin(), a.data().end(), 0.0) / a.data().size();
    double var = 0;
    for (double v: a.data()) var += (v - mean) * (v - mean);
    var /= a.data().size();
    ok = ok && mean >= -0.1 && mean <= 0.1 && var >= 0.8 && var <= 1.25;
    d << fmt("(%.3f, %.3f) ", mean, var);
  }
  return ok ? pass("layer (mean, var): " + d.str()) : fail(d.str());
}

Outcome feature_determinism() {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    auto m = oracle::random_molecule(rng, 16);
    auto base = featurize::assemble(chem::parse_smiles(chem::write_smiles(m).text));
    if (base.size() != featurize::FeatureLayout::kTotal) return fail(fmt("length %zu", base.size()));
    for (std::uint64_t s = 1; s <= 5; ++s) {
      int root = static_cast<int>((s * 7919 + i) % m.atom_count());
      auto text = chem::write_smiles(m, root, s).text;
      auto v = featurize::assemble(chem::parse_smiles(text));
      if (v != base) return fail("feature vector differs for rewriting " + text);
    }
  }
  return pass(fmt("200 molecules x 5 rewritings, length %zu", featurize::FeatureLayout::kTotal));
}

Outcome pattern_oracle() {
  std::mt19937_64 rng(12);
  std::size_t patterns = 0;
  for (const auto *set: {&featurize::structural_keys(), &featurize::toxicity_patterns()}) {
    for (int i = 0; i < 50; ++i) {
      auto m = oracle::random_molecule(rng, 12);
      auto got = featurize::match_patterns(m, *set);
      auto want = oracle::brute_force_pattern_vector(*set, m);
      if (got != want) {
        for (std::size_t k = 0; k < got.size(); ++k)
          if (got[k] != want[k])
            return fail(fmt("%s slot %zu on %s: %g vs %g", set->name.c_str(), k, chem::write_smiles(m).text.c_str(),
                            got[k], want[k]));
      }
    }
    patterns += set->entries.size();
  }
  return pass(fmt("%zu shipped patterns x 50 molecules per set", patterns));
}

Outcome protocol_conformance() {
  const std::string request = R"({"smiles": ["CCO", "c1ccccc1"]})";
  std::string row = R"({"NR-AhR":0.005747087765485048,"NR-AR":0.001738760736770928,)"
                    R"("NR-AR-LBD":0.00021425147133413702,"NR-Aromatase":0.1,"NR-ER":0.1,"NR-ER-LBD":0.1,)"
                    R"("NR-PPAR-gamma":0.1,"SR-ARE":0.1,"SR-ATAD5":0.1,"SR-HSE":0.1,"SR-MMP":0.1,)"
                    R"("SR-p53":0.0007309493375942111})";
  const std::string response = "{\"predictions\": {\"CCO\": " + row + ", \"c1ccccc1\": " + row +
                               "}, \"model_info\": {\"name\": \"Tox21 GIN classifier\", \"version\": \"1.0.0\"}}";
  auto req = protocol::decode_request(request);
  auto resp = protocol::decode_response(response);
  if (protocol::decode_request(protocol::encode_request(req)).smiles != req.smiles) return fail("request round trip");
  auto enc = protocol::encode_response(resp);
  auto back = protocol::decode_response(enc);
  if (back.predictions != resp.predictions || back.model_info != resp.model_info ||
      protocol::encode_response(back) != enc)
    return fail("response round trip");
  if (!protocol::validate_response(req, resp).ok()) return fail("example response does not validate");

  auto missing = resp;
  missing.predictions["CCO"].erase("NR-ER");
  auto a = protocol::validate_response(req, missing);
  if (a.violations.size() != 1 || a.violations[0].kind != protocol::ViolationKind::kMissingTarget)
    return fail("missing pair not reported as missing_target");
  auto nan_text = response;
  nan_text.replace(nan_text.find("0.005747087765485048"), 20, "NaN");
  auto b = protocol::validate_response(req, protocol::decode_response(nan_text));
  if (b.violations.size() != 1 || b.violations[0].kind != protocol::ViolationKind::kNonFinite)
    return fail("NaN not reported as non_finite");
  return pass("example round-trips; missing_target and non_finite reported");
}

Outcome end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  auto split = oracle::synthetic_dataset(500, 0.8, 0.10, 0.1, 2024);
  models::TrainRequest req;
  req.name = "acceptance-linear";
  req.seed = 1;
  auto x = models::featurize_rows(split.train);
  auto artifact = models::train_artifact(x, split.train, req);
  const double train_s = seconds_since(start);

  auto predictor = std::make_shared<serve::Predictor>(std::move(artifact));
  serve::PredictServer server(predictor, serve::ServerConfig{"127.0.0.1", 0, 4096});
  const std::string url = "http://127.0.0.1:" + std::to_string(server.start());

  std::vector<orchestrate::EvaluationResult> runs;
  for (std::size_t batch: {std::size_t{64}, std::size_t{1}}) {
    orchestrate::EvaluationJob job;
    job.submission_id = "e2e";
    job.endpoint_url = url;
    job.batch_size = batch;
    auto transport = orchestrate::make_http_transport(url);
    runs.push_back(orchestrate::run_evaluation(job, split.test, *transport));
  }
  server.stop();
  const double total = seconds_since(start);
  for (const auto &r: runs)
    if (r.status != orchestrate::Status::kScored)
      return fail(std::string("status ") + std::string(orchestrate::to_string(r.status)) + ": " + r.error);
  for (std::size_t e = 0; e < dataset::kEndpointCount; ++e)
    if (runs[0].score->per_endpoint[e].auc != runs[1].score->per_endpoint[e].auc)
      return fail(fmt("endpoint %zu differs between batch sizes 64 and 1", e));
  const double mean = runs[0].score->mean_auc;
  auto d = fmt("mean AUC %.4f on %zu test rows; batch 1 and 64 identical; %.1f s (training %.1f s)", mean,
               split.test.rows(), total, train_s);
  return mean >= 0.95 && total < 120 ? pass(d) : fail(d);
}

// Test-side model of the lifecycle, independent of the registry code.
enum class Act { kStart, kScored, kRejectedEval, kFailedEval, kApprove, kReject };
constexpr Act kActs[] = {Act::kStart, Act::kScored, Act::kRejectedEval, Act::kFailedEval, Act::kApprove, Act::kReject};

std::optional<registry::Status> model_step(registry::Status s, Act a) {
  using S = registry::Status;
  switch (a) {
  case Act::kStart: return s == S::kPending ? std::optional(S::kEvaluating) : std::nullopt;
  case Act::kScored: return s == S::kEvaluating ? std::optional(S::kPreliminary) : std::nullopt;
  case Act::kRejectedEval: return s == S::kEvaluating ? std::optional(S::kRejected) : std::nullopt;
  case Act::kFailedEval: return s == S::kEvaluating ? std::optional(S::kFailed) : std::nullopt;
  case Act::kApprove: return s == S::kPreliminary ? std::optional(S::kApproved) : std::nullopt;
  case Act::kReject: return s == S::kPreliminary ? std::optional(S::kRejected) : std::nullopt;
  }
  return std::nullopt;
}

orchestrate::EvaluationResult eval_result(orchestrate::Status st) {
  orchestrate::EvaluationResult r;
  r.status = st;
  if (st == orchestrate::Status::kScored) {
    metrics::RunScore s;
    for (const auto &e: dataset::endpoints()) s.per_endpoint.push_back({std::string(e.name), 0.8, 3, 7});
    s.mean_auc = 0.8;
    r.score = s;
  } else {
    r.error = "synthetic";
  }
  return r;
}

registry::ModelCard card() {
  registry::ModelCard c;
  c.model_name = "lifecycle";
  c.developer = "acceptance";
  c.architecture = "none";
  c.model_version = "1";
  c.space_url = "http://127.0.0.1:9";
  c.commit_hash = "0";
  return c;
}

void act(registry::Registry &reg, const std::string &id, Act a) {
  switch (a) {
  case Act::kStart: reg.start_evaluation(id); break;
  case Act::kScored: reg.attach_result(id, eval_result(orchestrate::Status::kScored)); break;
  case Act::kRejectedEval: reg.attach_result(id, eval_result(orchestrate::Status::kRejected)); break;
  case Act::kFailedEval: reg.attach_result(id, eval_result(orchestrate::Status::kFailed)); break;
  case Act::kApprove: reg.review(id, registry::Decision::kApprove, "acceptance", ""); break;
  case Act::kReject: reg.review(id, registry::Decision::kReject, "acceptance", ""); break;
  }
}

Outcome lifecycle() {
  using S = registry::Status;
  std::size_t sequences = 0, legal_steps = 0, approvals = 0;
  std::vector<Act> seq;
  std::string problem;
  std::function<void(std::size_t)> walk = [&](std::size_t len) {
    if (!problem.empty()) return;
    if (seq.size() == len) {
      ++sequences;
      auto clock = [n = 0]() mutable { return fmt("2026-01-01T00:00:%02d.000Z", n++); };
      registry::Registry reg({}, clock);
      const auto id = reg.submit(card()).id;
      S model = S::kPending;
      std::vector<S> path{model};
      for (Act a: seq) {
        auto next = model_step(model, a);
        const auto before = reg.state_hash();
        bool threw = false;
        try {
          act(reg, id, a);
        } catch (const registry::IllegalTransition &) {
          threw = true;
        }
        if (threw != !next.has_value()) {
          problem = fmt("registry and model disagree on legality at step %zu", path.size());
          return;
        }
        if (threw) {
          if (reg.state_hash() != before) problem = "illegal transition changed state";
          continue;
        }
        ++legal_steps;
        model = *next;
        path.push_back(model);
        if (reg.get(id).status != model) {
          problem = "status differs from model";
          return;
        }
      }
      // Approval, and any review outcome, is only ever reached from
      // preliminary; nothing leaves a terminal state.
      for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i] == S::kApproved) {
          ++approvals;
          if (path[i - 1] != S::kPreliminary) problem = "approved without preliminary";
        }
        if (registry::is_terminal(path[i - 1])) problem = "left a terminal state";
      }
      auto copy = registry::Registry::replay(reg.events());
      if (copy->state_hash() != reg.state_hash()) problem = "replay hash differs";
      return;
    }
    for (Act a: kActs) {
      seq.push_back(a);
      walk(len);
      seq.pop_back();
    }
  };
  for (std::size_t len = 0; len <= 6; ++len) walk(len);
  if (!problem.empty()) return fail(problem);

  // The same through the on-disk log: reopen and compare.
  const auto log = (std::filesystem::temp_directory_path() / "toxbench_acceptance_events.jsonl").string();
  std::filesystem::remove(log);
  std::string hash;
  {
    registry::Registry reg(log);
    for (int i = 0; i < 3; ++i) {
      auto id = reg.submit(card()).id;
      act(reg, id, Act::kStart);
      act(reg, id, i == 2 ? Act::kFailedEval : Act::kScored);
      if (i == 0) act(reg, id, Act::kApprove);
    }
    hash = reg.state_hash();
  }
  if (registry::Registry(log).state_hash() != hash) return fail("reopened log hash differs");
  std::filesystem::remove(log);
  return pass(fmt("%zu sequences, %zu legal steps, %zu approvals; replay and reopen hashes equal", sequences, legal_steps,
                  approvals));
}

Outcome aggregation() {
  auto a = metrics::aggregate_runs({0.84, 0.85, 0.83, 0.86, 0.82});
  auto d = fmt("median %.17g, MAD %.17g", a.median, a.mad);
  // MAD is compared to within 1e-12: 0.01 has no exact binary representation.
  return a.median == 0.84 && std::abs(a.mad - 0.01) <= 1e-12 ? pass(d) : fail(d);
}

Outcome real_data_audit() {
  const char *train = std::getenv("TOX21_TRAIN_CSV");
  const char *test = std::getenv("TOX21_TEST_CSV");
  if (!train || !test) return skip("set TOX21_TRAIN_CSV and TOX21_TEST_CSV to run");
  auto tr = dataset::load_dataset(train);
  auto te = dataset::load_dataset(test);
  auto a = dataset::audit(tr.matrix, "train", tr.report.excluded.size());
  auto b = dataset::audit(te.matrix, "test", te.report.excluded.size());
  auto d = fmt("train %zu/%zu labeled %.2f%% active %.2f%%; test %zu/%zu", a.total_rows, a.unique_molecules,
               a.labeled_pct, a.active_pct, b.total_rows, b.unique_molecules);
  bool ok = a.total_rows == 11764 && a.unique_molecules == 8043 && std::abs(a.labeled_pct - 69.7) <= 0.1 &&
            std::abs(a.active_pct - 7.3) <= 0.1 && b.total_rows == 647 && b.unique_molecules == 645;
  return ok ? pass(d) : fail(d);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    const char *name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"auc-oracle-equivalence", auc_oracle},
      {"auc-hand-values", hand_aucs},
      {"masked-metamorphism", masked_metamorphism},
      {"gradient-checks", gradient_checks},
      {"selu-self-normalization", selu_self_normalization},
      {"feature-determinism", feature_determinism},
      {"pattern-matcher-oracle", pattern_oracle},
      {"protocol-conformance", protocol_conformance},
      {"end-to-end-pipeline", end_to_end},
      {"lifecycle-and-persistence", lifecycle},
      {"aggregation", aggregation},
      {"real-data-audit", real_data_audit},
  };
  int failures = 0;
  for (const auto &c: criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char *tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL" : "SKIP";
    failures += o.kind == Outcome::kFail;
    std::printf("%s %-28s %7.2fs  %s\n", tag, c.name, seconds_since(start), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
