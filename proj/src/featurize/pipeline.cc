// SPDX-License-Identifier: Apache-2.0

#include "toxbench/featurize/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "toxbench/featurize/features.h"
#include "toxbench/util/binary_io.h"
#include "toxbench/util/hash.h"

namespace toxbench::featurize {

namespace {

constexpr std::string_view kMagic = "TBXPIPE\x01";
constexpr std::uint32_t kVersion = 1;

double quantile(std::vector<double> sorted, double q) {
  // Linear interpolation between order statistics.
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double quantize_value(const std::vector<double> &e, double x) {
  std::size_t bin = 3;
  for (std::size_t b = 0; b < 3; ++b)
    if (x <= e[b + 1]) {
      bin = b;
      break;
    }
  return 0.5 * (e[bin] + e[bin + 1]);
}

std::string matrix_hash(const Matrix &m) {
  Fnv1a h;
  h.add_u64(m.rows());
  h.add_u64(m.cols());
  for (double x: m.data()) h.add_f64(x);
  return to_hex(h.digest());
}

}  // namespace

void PipelineConfig::validate(std::size_t feature_count) const {
  if (variance_threshold && (!std::isfinite(*variance_threshold) || *variance_threshold < 0))
    throw std::invalid_argument("variance_threshold must be finite and non-negative");
  if (correlation_threshold &&
      (!std::isfinite(*correlation_threshold) || *correlation_threshold <= 0 || *correlation_threshold > 1))
    throw std::invalid_argument("correlation_threshold must lie in (0, 1]");
  if (top_k_variance && (*top_k_variance == 0 || *top_k_variance > feature_count))
    throw std::invalid_argument("top_k_variance must be in [1, feature count]");
}

FittedPipeline fit_pipeline(const Matrix &m, const PipelineConfig &cfg) {
  if (m.rows() == 0) throw std::invalid_argument("cannot fit pipeline on an empty matrix");
  cfg.validate(m.cols());
  for (double x: m.data())
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value in training matrix");

  const std::size_t n = m.rows(), d = m.cols();
  const double nd = static_cast<double>(n);
  std::vector<double> col_mean(d, 0.0), col_var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) col_mean[c] += m(r, c);
  for (auto &x: col_mean) x /= nd;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double dx = m(r, c) - col_mean[c];
      col_var[c] += dx * dx;
    }
  for (auto &x: col_var) x /= nd;

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < d; ++c)
    if (!cfg.variance_threshold || col_var[c] > *cfg.variance_threshold) kept.push_back(c);

  if (cfg.correlation_threshold) {
    // Unit-norm centred columns make the Pearson correlation a dot product.
    auto unit_column = [&](std::size_t c) {
      std::vector<double> u(n);
      double norm = 0;
      for (std::size_t r = 0; r < n; ++r) {
        u[r] = m(r, c) - col_mean[c];
        norm += u[r] * u[r];
      }
      norm = std::sqrt(norm);
      for (auto &x: u) x = norm > 0 ? x / norm : 0.0;
      return u;
    };
    std::vector<std::size_t> survivors;
    std::vector<std::vector<double>> kept_units;
    for (std::size_t c: kept) {
      auto u = unit_column(c);
      bool redundant = false;
      for (const auto &k: kept_units) {
        double dot = std::inner_product(u.begin(), u.end(), k.begin(), 0.0);
        if (std::abs(dot) > *cfg.correlation_threshold) {
          redundant = true;
          break;
        }
      }
      if (!redundant) {
        survivors.push_back(c);
        kept_units.push_back(std::move(u));
      }
    }
    kept = std::move(survivors);
  }

  if (cfg.top_k_variance && kept.size() > *cfg.top_k_variance) {
    std::vector<std::size_t> by_var(kept);
    std::stable_sort(by_var.begin(), by_var.end(), [&](std::size_t a, std::size_t b) {
      if (col_var[a] != col_var[b]) return col_var[a] > col_var[b];
      return a < b;
    });
    by_var.resize(*cfg.top_k_variance);
    std::sort(by_var.begin(), by_var.end());
    kept = std::move(by_var);
  }

  FittedPipeline p;
  p.config = cfg;
  p.input_width = d;
  p.kept_indices = kept;
  p.fit_rows = n;
  p.fit_data_hash = matrix_hash(m);
  p.layout_hash = d == FeatureLayout::kTotal ? featurize::layout_hash() : std::string();
  p.bin_edges.resize(kept.size());
  p.mean.resize(kept.size());
  p.stddev.resize(kept.size());
  const bool full_layout = d == FeatureLayout::kTotal;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t c = kept[k];
    std::vector<double> column(n);
    for (std::size_t r = 0; r < n; ++r) column[r] = m(r, c);
    if (cfg.quantize && full_layout && FeatureLayout::is_descriptor(c)) {
      std::vector<double> sorted(column);
      std::sort(sorted.begin(), sorted.end());
      p.bin_edges[k] = {sorted.front(), quantile(sorted, 0.25), quantile(sorted, 0.5), quantile(sorted, 0.75),
                        sorted.back()};
      for (auto &x: column) x = quantize_value(p.bin_edges[k], x);
    }
    double mu = 0;
    for (double x: column) mu += x;
    mu /= nd;
    double var = 0;
    for (double x: column) var += (x - mu) * (x - mu);
    p.mean[k] = mu;
    p.stddev[k] = std::sqrt(var / nd);
  }
  return p;
}

std::vector<double> FittedPipeline::apply(std::span<const double> row) const {
  if (row.size() != input_width)
    throw std::invalid_argument("layout mismatch: pipeline expects " + std::to_string(input_width) +
                                " features, got " + std::to_string(row.size()));
  std::vector<double> out(kept_indices.size());
  for (std::size_t k = 0; k < kept_indices.size(); ++k) {
    double x = row[kept_indices[k]];
    if (!bin_edges[k].empty()) x = quantize_value(bin_edges[k], x);
    if (config.normalize) x = (x - mean[k]) / std::max(stddev[k], kStdFloor);
    out[k] = x;
  }
  return out;
}

Matrix FittedPipeline::apply(const Matrix &m) const {
  Matrix out(m.rows(), output_width());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto v = apply(m.row(r));
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

std::string FittedPipeline::serialize() const {
  BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(0);
  auto opt = [&](const std::optional<double> &v) {
    w.u8(v ? 1 : 0);
    w.f64(v.value_or(0.0));
  };
  opt(config.variance_threshold);
  opt(config.correlation_threshold);
  w.u8(config.quantize);
  w.u8(config.normalize);
  w.u8(config.top_k_variance ? 1 : 0);
  w.u64(config.top_k_variance.value_or(0));
  w.u64(input_width);
  w.u64(fit_rows);
  w.str(fit_data_hash);
  w.str(layout_hash);
  w.u64(kept_indices.size());
  for (std::size_t k = 0; k < kept_indices.size(); ++k) {
    w.u64(kept_indices[k]);
    w.f64(mean[k]);
    w.f64(stddev[k]);
    w.f64s(bin_edges[k]);
  }
  return w.data();
}

FittedPipeline FittedPipeline::deserialize(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.bytes(kMagic.size()) != kMagic) throw std::runtime_error("pipeline: bad magic");
  if (r.u32() != kVersion) throw std::runtime_error("pipeline: unsupported version");
  r.u32();
  FittedPipeline p;
  auto opt = [&]() -> std::optional<double> {
    bool set = r.u8() != 0;
    double v = r.f64();
    return set ? std::optional<double>(v) : std::nullopt;
  };
  p.config.variance_threshold = opt();
  p.config.correlation_threshold = opt();
  p.config.quantize = r.u8() != 0;
  p.config.normalize = r.u8() != 0;
  bool has_k = r.u8() != 0;
  auto k = r.u64();
  p.config.top_k_variance = has_k ? std::optional<std::size_t>(k) : std::nullopt;
  p.input_width = r.u64();
  p.fit_rows = r.u64();
  p.fit_data_hash = r.str();
  p.layout_hash = r.str();
  auto count = r.u64();
  if (count > r.remaining() / 32) throw TruncatedInput("pipeline: kept feature table truncated");
  std::size_t prev = 0;
  for (std::size_t i = 0; i < count; ++i) {
    auto idx = r.u64();
    if (idx >= p.input_width || (i > 0 && idx <= prev)) throw std::runtime_error("pipeline: bad kept index");
    prev = idx;
    p.kept_indices.push_back(idx);
    p.mean.push_back(r.f64());
    p.stddev.push_back(r.f64());
    auto edges = r.f64s();
    if (!edges.empty() && edges.size() != 5) throw std::runtime_error("pipeline: bad bin edges");
    p.bin_edges.push_back(std::move(edges));
  }
  if (!r.done()) throw std::runtime_error("pipeline: trailing bytes");
  return p;
}

std::string FittedPipeline::content_hash() const { return to_hex(fnv1a(serialize())); }

}  // namespace toxbench::featurize
