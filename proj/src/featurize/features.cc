// SPDX-License-Identifier: Apache-2.0

#include "toxbench/featurize/features.h"

#include "toxbench/featurize/descriptors.h"
#include "toxbench/featurize/fingerprint.h"
#include "toxbench/featurize/pattern.h"
#include "toxbench/util/binary_io.h"
#include "toxbench/util/hash.h"

namespace toxbench::featurize {

namespace {
constexpr std::string_view kMatrixMagic = "TBXFEATM";
constexpr std::uint32_t kMatrixVersion = 1;
}  // namespace

FeatureVector assemble(const chem::Molecule &mol) {
  FeatureVector v;
  v.reserve(FeatureLayout::kTotal);
  for (auto c: ecfp_counts(mol)) v.push_back(static_cast<double>(c));
  auto keys = match_patterns(mol, structural_keys());
  v.insert(v.end(), keys.begin(), keys.end());
  auto desc = descriptors(mol);
  v.insert(v.end(), desc.begin(), desc.end());
  auto tox = match_patterns(mol, toxicity_patterns());
  v.insert(v.end(), tox.begin(), tox.end());
  return v;
}

std::string layout_hash() {
  Fnv1a h;
  h.add_u64(FeatureLayout::kTotal);
  h.add_string(structural_keys().content_hash);
  h.add_string(DescriptorList::shipped().content_hash);
  h.add_string(toxicity_patterns().content_hash);
  return to_hex(h.digest());
}

void write_feature_matrix(const std::string &path, const Matrix &m) {
  BinaryWriter w;
  w.bytes(kMatrixMagic);
  w.u32(kMatrixVersion);
  w.u32(0);
  w.u64(m.rows());
  w.u64(m.cols());
  for (double x: m.data()) w.f64(x);
  write_file(path, w.data());
}

Matrix read_feature_matrix(const std::string &path) {
  auto bytes = read_file(path);
  BinaryReader r(bytes);
  if (r.bytes(8) != kMatrixMagic) throw std::runtime_error(path + ": not a feature matrix");
  if (r.u32() != kMatrixVersion) throw std::runtime_error(path + ": unsupported feature matrix version");
  r.u32();
  auto rows = r.u64();
  auto cols = r.u64();
  if (cols != 0 && rows > r.remaining() / 8 / cols)
    throw TruncatedInput(path + ": matrix body shorter than " + std::to_string(rows) + "x" + std::to_string(cols));
  Matrix m(rows, cols);
  for (auto &x: m.data()) x = r.f64();
  if (!r.done()) throw std::runtime_error(path + ": trailing bytes after matrix");
  return m;
}

}  // namespace toxbench::featurize
