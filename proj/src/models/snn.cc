// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/snn.h"

#include <cmath>
#include <random>

#include "toxbench/models/loss.h"

namespace toxbench::models {

namespace {

constexpr double kSaturation = -SeluConstants::kLambda * SeluConstants::kAlpha;

struct Dropout {
  double a = 1.0;
  double b = 0.0;
  std::vector<std::uint8_t> keep;  // empty = no dropout
};

Dropout make_dropout(std::size_t n, double rate, std::mt19937_64 &rng) {
  Dropout d;
  if (rate <= 0) return d;
  const double q = 1.0 - rate;
  d.a = 1.0 / std::sqrt(q + kSaturation * kSaturation * q * (1.0 - q));
  d.b = -d.a * kSaturation * (1.0 - q);
  std::bernoulli_distribution keep(q);
  d.keep.resize(n);
  for (auto &k: d.keep) k = keep(rng) ? 1 : 0;
  return d;
}

// Pre-activations and outputs of every layer for one forward pass.
struct Trace {
  std::vector<Matrix> inputs;  // input of layer l
  std::vector<Matrix> pre;     // pre-activation of layer l
  std::vector<Dropout> drop;   // dropout applied after hidden layer l
};

Matrix affine(const Matrix &x, const Matrix &w, const std::vector<double> &b) {
  Matrix out(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      auto wr = w.row(o);
      double s = b[o];
      for (std::size_t i = 0; i < xr.size(); ++i) s += wr[i] * xr[i];
      out(r, o) = s;
    }
  }
  return out;
}

Matrix forward(const SnnModel &m, const Matrix &x, Trace *trace, std::mt19937_64 *rng) {
  if (x.cols() != m.input_width())
    throw std::invalid_argument("SNN expects width " + std::to_string(m.input_width()) + ", got " +
                                std::to_string(x.cols()));
  Matrix h = x;
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    Matrix z = affine(h, m.weights[l], m.biases[l]);
    if (trace) {
      trace->inputs.push_back(h);
      trace->pre.push_back(z);
    }
    if (l + 1 == m.layer_count()) return z;
    for (auto &v: z.data()) v = selu(v);
    if (rng && m.dropout_rate > 0) {
      Dropout d = make_dropout(z.data().size(), m.dropout_rate, *rng);
      for (std::size_t i = 0; i < z.data().size(); ++i)
        z.data()[i] = d.a * (d.keep[i] ? z.data()[i] : kSaturation) + d.b;
      if (trace) trace->drop.push_back(std::move(d));
    } else if (trace) {
      trace->drop.emplace_back();
    }
    h = std::move(z);
  }
  return h;
}

}  // namespace

double selu(double x) {
  return x > 0 ? SeluConstants::kLambda * x : SeluConstants::kLambda * SeluConstants::kAlpha * std::expm1(x);
}

double selu_derivative(double x) {
  return x > 0 ? SeluConstants::kLambda : SeluConstants::kLambda * SeluConstants::kAlpha * std::exp(x);
}

std::vector<double> alpha_dropout(std::span<const double> values, double rate, std::uint64_t seed) {
  if (rate < 0 || rate >= 1) throw std::invalid_argument("dropout rate must be in [0, 1)");
  std::vector<double> out(values.begin(), values.end());
  if (rate == 0) return out;
  std::mt19937_64 rng(seed);
  Dropout d = make_dropout(out.size(), rate, rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.a * (d.keep[i] ? out[i] : kSaturation) + d.b;
  return out;
}

void SnnConfig::validate() const {
  train.validate();
  if (dropout_rate < 0 || dropout_rate >= 1) throw std::invalid_argument("dropout_rate must be in [0, 1)");
  for (auto w: hidden)
    if (w == 0) throw std::invalid_argument("hidden layer width must be >= 1");
}

nlohmann::json SnnConfig::to_json() const {
  auto j = train.to_json();
  j["hidden"] = hidden;
  j["dropout_rate"] = dropout_rate;
  return j;
}

SnnConfig SnnConfig::from_json(const nlohmann::json &j) {
  SnnConfig c;
  c.train = TrainConfig::from_json(j);
  if (!j.contains("learning_rate")) c.train.learning_rate = 0.01;
  if (!j.contains("l2")) c.train.l2 = 1e-5;
  if (!j.contains("epochs")) c.train.epochs = 50;
  c.hidden = j.value("hidden", c.hidden);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  return c;
}

SnnModel SnnModel::initialize(std::vector<std::size_t> widths, double dropout_rate, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("SNN needs at least input and output widths");
  SnnModel m;
  m.widths = std::move(widths);
  m.dropout_rate = dropout_rate;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
    const std::size_t in = m.widths[l], out = m.widths[l + 1];
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    Matrix w(out, in);
    for (auto &v: w.data()) v = dist(rng);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  return m;
}

Matrix SnnModel::logits(const Matrix &x) const { return forward(*this, x, nullptr, nullptr); }

Matrix SnnModel::predict_proba(const Matrix &x) const {
  Matrix p = logits(x);
  for (auto &v: p.data()) v = sigmoid(v);
  return p;
}

std::vector<Matrix> SnnModel::hidden_activations(const Matrix &x) const {
  Trace t;
  forward(*this, x, &t, nullptr);
  std::vector<Matrix> out;
  // The input of layer l+1 is the activation of hidden layer l.
  for (std::size_t l = 1; l < t.inputs.size(); ++l) out.push_back(t.inputs[l]);
  return out;
}

std::size_t SnnModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data().size() + biases[l].size();
  return n;
}

std::vector<double> SnnModel::flat_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.insert(p.end(), weights[l].data().begin(), weights[l].data().end());
    p.insert(p.end(), biases[l].begin(), biases[l].end());
  }
  return p;
}

void SnnModel::set_flat_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("SNN parameter vector has wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (auto &v: weights[l].data()) v = p[k++];
    for (auto &v: biases[l]) v = p[k++];
  }
}

SnnGradient snn_gradient(const SnnModel &model, const Matrix &x, const dataset::LabelMatrix &truth,
                         std::span<const std::size_t> rows, double l2, std::optional<std::uint64_t> dropout_seed) {
  Trace t;
  std::mt19937_64 rng(dropout_seed.value_or(0));
  Matrix z = forward(model, x, &t, dropout_seed ? &rng : nullptr);
  auto loss = masked_bce(z, truth, rows);

  SnnGradient out;
  out.loss = loss.loss;
  for (const auto &w: model.weights)
    for (double v: w.data()) out.loss += 0.5 * l2 * v * v;

  std::vector<std::vector<double>> gw(model.layer_count()), gb(model.layer_count());
  Matrix delta = std::move(loss.grad);  // d loss / d pre-activation of the current layer
  for (std::size_t l = model.layer_count(); l-- > 0;) {
    const Matrix &in = t.inputs[l];
    const Matrix &w = model.weights[l];
    gw[l].assign(w.data().size(), 0.0);
    gb[l].assign(w.rows(), 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto dr = delta.row(r);
      auto xr = in.row(r);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        if (dr[o] == 0.0) continue;
        double *g = gw[l].data() + o * w.cols();
        for (std::size_t i = 0; i < w.cols(); ++i) g[i] += dr[o] * xr[i];
        gb[l][o] += dr[o];
      }
    }
    for (std::size_t k = 0; k < gw[l].size(); ++k) gw[l][k] += l2 * w.data()[k];
    if (l == 0) break;
    // Back through the affine map, the dropout of layer l-1 and its SELU.
    Matrix prev(delta.rows(), w.cols());
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto dr = delta.row(r);
      auto pr = prev.row(r);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        if (dr[o] == 0.0) continue;
        auto wr = w.row(o);
        for (std::size_t i = 0; i < w.cols(); ++i) pr[i] += dr[o] * wr[i];
      }
    }
    const Dropout &d = t.drop[l - 1];
    const Matrix &pre = t.pre[l - 1];
    for (std::size_t k = 0; k < prev.data().size(); ++k) {
      double g = prev.data()[k];
      if (!d.keep.empty()) g = d.keep[k] ? g * d.a : 0.0;
      prev.data()[k] = g * selu_derivative(pre.data()[k]);
    }
    delta = std::move(prev);
  }
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    out.grad.insert(out.grad.end(), gw[l].begin(), gw[l].end());
    out.grad.insert(out.grad.end(), gb[l].begin(), gb[l].end());
  }
  return out;
}

SnnTraining train_snn(const Matrix &x, const dataset::LabelMatrix &truth, const SnnConfig &cfg) {
  cfg.validate();
  if (x.rows() != truth.rows()) throw std::invalid_argument("train_snn: feature/label row mismatch");
  if (truth.present_count() == 0) throw std::invalid_argument("train_snn: no labels present");
  for (double v: x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("train_snn: non-finite feature");

  std::vector<std::size_t> widths{x.cols()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(dataset::kEndpointCount);
  SnnTraining out;
  out.model = SnnModel::initialize(widths, cfg.dropout_rate, cfg.train.seed);
  auto params = out.model.flat_parameters();
  MomentumSgd opt(cfg.train.learning_rate, cfg.train.momentum);
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    for (const auto &batch: epoch_batches(x.rows(), cfg.train.batch_size, cfg.train.seed, epoch)) {
      Matrix xb(batch.size(), x.cols());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto src = x.row(batch[i]);
        std::copy(src.begin(), src.end(), xb.row(i).begin());
      }
      std::optional<std::uint64_t> drop_seed;
      if (cfg.dropout_rate > 0) drop_seed = cfg.train.seed * 1000003ULL + step;
      auto g = snn_gradient(out.model, xb, truth, batch, cfg.train.l2, drop_seed);
      if (!std::isfinite(g.loss)) throw TrainingDiverged(epoch, g.loss);
      opt.step(params, g.grad);
      out.model.set_flat_parameters(params);
      ++step;
    }
  }
  auto final_loss = masked_bce(out.model.logits(x), truth);
  if (!std::isfinite(final_loss.loss)) throw TrainingDiverged(cfg.train.epochs, final_loss.loss);
  out.final_loss = final_loss.loss;
  return out;
}

}  // namespace toxbench::models
