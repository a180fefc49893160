// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/artifact.h"

#include <cmath>
#include <filesystem>

#include "toxbench/featurize/features.h"
#include "toxbench/util/binary_io.h"
#include "toxbench/util/hash.h"

namespace toxbench::models {

namespace {

constexpr std::string_view kWeightsMagic = "TBXWGHT1";
constexpr std::uint32_t kWeightsVersion = 1;
constexpr int kFormatVersion = 1;

enum class Kind : std::uint32_t { kLinear = 1, kSnn = 2, kKnn = 3 };

void write_matrix(BinaryWriter &w, const Matrix &m) {
  w.u64(m.rows());
  w.u64(m.cols());
  for (double v: m.data()) w.f64(v);
}

Matrix read_matrix(BinaryReader &r) {
  auto rows = r.u64(), cols = r.u64();
  if (cols != 0 && rows > r.remaining() / 8 / cols)
    throw TruncatedInput("weights: matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                         std::to_string(rows * cols * 8) + " bytes, " + std::to_string(r.remaining()) + " remain");
  Matrix m(rows, cols);
  for (auto &v: m.data()) v = r.f64();
  return m;
}

std::uint64_t checked_count(double v, const char *what) {
  if (!(v >= 0) || v != std::floor(v) || v > 9.0e15) throw ArtifactError(std::string("weights: bad ") + what);
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::string model_kind(const AnyModel &m) {
  static const char *names[] = {"linear", "snn", "knn"};
  return names[m.index()];
}

std::size_t model_input_width(const AnyModel &m) {
  return std::visit(
      [](const auto &x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, KnnModel>) return x.width;
        else return x.input_width();
      },
      m);
}

const std::string &model_pipeline_ref(const AnyModel &m) {
  return std::visit([](const auto &x) -> const std::string & { return x.pipeline_ref; }, m);
}

Matrix predict_proba(const AnyModel &m, const Matrix &x) {
  return std::visit([&](const auto &model) { return model.predict_proba(x); }, m);
}

std::string encode_weights(const AnyModel &m) {
  BinaryWriter w;
  w.bytes(kWeightsMagic);
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(m.index() + 1));
  w.str(model_pipeline_ref(m));
  if (auto *lin = std::get_if<LinearModel>(&m)) {
    write_matrix(w, lin->weights);
    w.f64s(lin->bias);
  } else if (auto *snn = std::get_if<SnnModel>(&m)) {
    w.f64(snn->dropout_rate);
    w.u64(snn->layer_count());
    for (std::size_t l = 0; l < snn->layer_count(); ++l) {
      write_matrix(w, snn->weights[l]);
      w.f64s(snn->biases[l]);
    }
  } else {
    const auto &knn = std::get<KnnModel>(m);
    w.u64(knn.k);
    w.u64(knn.width);
    w.u64(knn.fingerprints.size());
    // Fingerprints as f64 (nnz, index, count, index, count, ...).
    for (const auto &fp: knn.fingerprints) {
      w.f64(static_cast<double>(fp.size()));
      for (const auto &[idx, count]: fp) {
        w.f64(static_cast<double>(idx));
        w.f64(count);
      }
    }
    // Label block then presence block, rows x 12 each.
    for (const auto &row: knn.labels)
      for (const auto &v: row) w.f64(v.value_or(0));
    for (const auto &row: knn.labels)
      for (const auto &v: row) w.f64(v ? 1.0 : 0.0);
  }
  return w.data();
}

AnyModel decode_weights(std::string_view bytes) {
  BinaryReader r(bytes);
  try {
    if (r.bytes(8) != kWeightsMagic) throw ArtifactError("weights: bad magic");
    if (r.u32() != kWeightsVersion) throw ArtifactError("weights: unsupported version");
    const auto kind = static_cast<Kind>(r.u32());
    std::string ref = r.str();
    AnyModel out;
    switch (kind) {
    case Kind::kLinear: {
      LinearModel m;
      m.pipeline_ref = ref;
      m.weights = read_matrix(r);
      m.bias = r.f64s();
      if (m.weights.rows() != dataset::kEndpointCount || m.bias.size() != dataset::kEndpointCount)
        throw ArtifactError("weights: linear model must have 12 outputs");
      out = std::move(m);
      break;
    }
    case Kind::kSnn: {
      SnnModel m;
      m.pipeline_ref = ref;
      m.dropout_rate = r.f64();
      auto layers = r.u64();
      if (layers == 0 || layers > 64) throw ArtifactError("weights: bad SNN layer count");
      for (std::size_t l = 0; l < layers; ++l) {
        m.weights.push_back(read_matrix(r));
        m.biases.push_back(r.f64s());
        const auto &w = m.weights.back();
        if (m.biases.back().size() != w.rows()) throw ArtifactError("weights: SNN bias width mismatch");
        if (l == 0) m.widths.push_back(w.cols());
        else if (w.cols() != m.widths.back()) throw ArtifactError("weights: SNN layer widths do not chain");
        m.widths.push_back(w.rows());
      }
      if (m.widths.back() != dataset::kEndpointCount) throw ArtifactError("weights: SNN must have 12 outputs");
      out = std::move(m);
      break;
    }
    case Kind::kKnn: {
      KnnModel m;
      m.pipeline_ref = ref;
      m.k = r.u64();
      m.width = r.u64();
      auto rows = r.u64();
      if (rows > r.remaining() / 8) throw TruncatedInput("weights: knn store larger than file");
      for (std::size_t i = 0; i < rows; ++i) {
        auto nnz = checked_count(r.f64(), "nnz");
        if (nnz > m.width) throw ArtifactError("weights: knn fingerprint wider than declared");
        SparseCounts fp;
        for (std::size_t j = 0; j < nnz; ++j) {
          auto idx = checked_count(r.f64(), "index");
          if (idx >= m.width) throw ArtifactError("weights: knn index out of range");
          fp.emplace_back(static_cast<std::uint32_t>(idx), r.f64());
        }
        m.fingerprints.push_back(std::move(fp));
      }
      std::vector<double> values(rows * dataset::kEndpointCount);
      for (auto &v: values) v = r.f64();
      m.labels.resize(rows);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t e = 0; e < dataset::kEndpointCount; ++e) {
          double present = r.f64();
          if (present != 0.0) m.labels[i][e] = static_cast<std::uint8_t>(values[i * dataset::kEndpointCount + e] != 0);
        }
      if (m.k == 0 || m.k > rows) throw ArtifactError("weights: knn k out of range");
      out = std::move(m);
      break;
    }
    default:
      throw ArtifactError("weights: unknown model kind");
    }
    if (!r.done()) throw ArtifactError("weights: " + std::to_string(r.remaining()) + " trailing bytes");
    return out;
  } catch (const TruncatedInput &e) {
    throw ArtifactError("weights.bin truncated (" + std::to_string(bytes.size()) + " bytes): " + e.what());
  }
}

void save_artifact(const std::string &dir, const Artifact &a) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string pipeline_bytes = a.pipeline.serialize();
  const std::string weights_bytes = encode_weights(a.model);
  nlohmann::json manifest = {
      {"format_version", kFormatVersion},
      {"kind", model_kind(a.model)},
      {"name", a.name},
      {"version", a.version},
      {"layout_hash", a.pipeline.layout_hash},
      {"pipeline_hash", to_hex(fnv1a(pipeline_bytes))},
      {"weights_hash", to_hex(fnv1a(weights_bytes))},
      {"input_width", a.pipeline.input_width},
      {"model_input_width", model_input_width(a.model)},
      {"hyperparameters", a.hyperparameters},
      {"seed", a.seed},
  };
  write_file((fs::path(dir) / "pipeline.bin").string(), pipeline_bytes);
  write_file((fs::path(dir) / "weights.bin").string(), weights_bytes);
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Artifact load_artifact(const std::string &dir) {
  namespace fs = std::filesystem;
  auto path = [&](const char *name) {
    auto p = fs::path(dir) / name;
    if (!fs::exists(p)) throw ArtifactError("artifact is missing " + p.string());
    return p.string();
  };
  const auto manifest_path = path("manifest.json");
  const auto weights_path = path("weights.bin");
  const auto pipeline_path = path("pipeline.bin");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception &e) {
    throw ArtifactError("manifest.json: " + std::string(e.what()));
  }
  auto field = [&](const char *key) -> std::string {
    if (!manifest.contains(key) || !manifest[key].is_string()) throw ArtifactError(std::string("manifest.json: missing ") + key);
    return manifest[key].get<std::string>();
  };

  Artifact a;
  a.name = field("name");
  a.version = field("version");
  a.hyperparameters = manifest.value("hyperparameters", nlohmann::json::object());
  a.seed = manifest.value("seed", std::uint64_t{0});

  const std::string weights_bytes = read_file(weights_path);
  a.model = decode_weights(weights_bytes);
  if (to_hex(fnv1a(weights_bytes)) != field("weights_hash")) throw ArtifactError("weights.bin hash mismatch");
  if (field("kind") != model_kind(a.model)) throw ArtifactError("manifest kind does not match weights.bin");

  const std::string pipeline_bytes = read_file(pipeline_path);
  const std::string pipeline_hash = to_hex(fnv1a(pipeline_bytes));
  if (pipeline_hash != field("pipeline_hash")) throw ArtifactError("pipeline.bin hash does not match manifest");
  if (model_pipeline_ref(a.model) != pipeline_hash) throw ArtifactError("model was trained behind a different pipeline");
  try {
    a.pipeline = featurize::FittedPipeline::deserialize(pipeline_bytes);
  } catch (const std::exception &e) {
    throw ArtifactError(std::string("pipeline.bin: ") + e.what());
  }
  if (a.pipeline.input_width != featurize::FeatureLayout::kTotal)
    throw ArtifactError("pipeline input width " + std::to_string(a.pipeline.input_width) + " is not the feature layout");
  if (a.pipeline.layout_hash != featurize::layout_hash())
    throw ArtifactError("artifact was built against a different feature layout");
  if (a.pipeline.output_width() != model_input_width(a.model) && !std::holds_alternative<KnnModel>(a.model))
    throw ArtifactError("pipeline output width " + std::to_string(a.pipeline.output_width()) +
                        " does not match model input width " + std::to_string(model_input_width(a.model)));
  if (auto *knn = std::get_if<KnnModel>(&a.model); knn && knn->width > a.pipeline.output_width())
    throw ArtifactError("knn fingerprint width exceeds pipeline output");
  return a;
}

}  // namespace toxbench::models
