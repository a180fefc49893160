// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/knn.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace toxbench::models {

double tanimoto(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("tanimoto: width mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::min(a[i], b[i]);
    den += std::max(a[i], b[i]);
  }
  return den == 0 ? 1.0 : num / den;
}

SparseCounts to_sparse(std::span<const double> dense) {
  SparseCounts out;
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0) out.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
  return out;
}

double tanimoto(const SparseCounts &a, const SparseCounts &b) {
  // Merge in index order; the sums visit terms in the same order as the
  // dense version, so both agree bit for bit on non-negative counts.
  double num = 0, den = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      den += a[i++].second;
    } else if (i == a.size() || b[j].first < a[i].first) {
      den += b[j++].second;
    } else {
      num += std::min(a[i].second, b[j].second);
      den += std::max(a[i].second, b[j].second);
      ++i;
      ++j;
    }
  }
  return den == 0 ? 1.0 : num / den;
}

KnnModel KnnModel::fit(const Matrix &x, const dataset::LabelMatrix &truth, std::size_t k, std::size_t width) {
  if (x.rows() != truth.rows()) throw std::invalid_argument("knn: feature/label row mismatch");
  if (k == 0 || k > x.rows()) throw std::invalid_argument("knn: k must be in [1, stored rows]");
  if (width == 0 || width > x.cols()) throw std::invalid_argument("knn: bad fingerprint width");
  KnnModel m;
  m.k = k;
  m.width = width;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    m.fingerprints.push_back(to_sparse(x.row(r).first(width)));
    m.labels.push_back(truth.row(r));
  }
  return m;
}

std::array<double, dataset::kEndpointCount> KnnModel::predict(std::span<const double> fingerprint) const {
  if (fingerprint.size() < width) throw std::invalid_argument("knn: input narrower than fingerprint width");
  auto query = to_sparse(fingerprint.first(width));
  std::vector<double> sim(fingerprints.size());
  for (std::size_t i = 0; i < fingerprints.size(); ++i) sim[i] = tanimoto(query, fingerprints[i]);
  std::vector<std::size_t> order(fingerprints.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });

  std::array<double, dataset::kEndpointCount> out{};
  for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
    double wsum = 0, wy = 0, ysum = 0;
    std::size_t used = 0;
    for (std::size_t idx: order) {
      if (used == k) break;
      const auto &y = labels[idx][e];
      if (!y) continue;
      wsum += sim[idx];
      wy += sim[idx] * *y;
      ysum += *y;
      ++used;
    }
    if (used == 0) out[e] = 0.5;
    else if (wsum == 0) out[e] = ysum / static_cast<double>(used);
    else out[e] = wy / wsum;
  }
  return out;
}

Matrix KnnModel::predict_proba(const Matrix &x) const {
  Matrix out(x.rows(), dataset::kEndpointCount);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto p = predict(x.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace toxbench::models
