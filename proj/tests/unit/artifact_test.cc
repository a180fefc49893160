// SPDX-License-Identifier: Apache-2.0

#include <filesystem>

#include <gtest/gtest.h>

#include "json.hpp"
#include "oracles.h"
#include "toxbench/models/workflow.h"
#include "toxbench/util/binary_io.h"

using namespace toxbench;
using namespace toxbench::models;
namespace fs = std::filesystem;

namespace {

struct Data {
  dataset::LabelMatrix truth;
  Matrix x;
};

const Data &data() {
  static const Data d = [] {
    auto split = oracles::synthetic_dataset(60, 0.5, 0.0, 0.2, 1);
    Data out{split.train, {}};
    out.x = featurize_rows(out.truth);
    return out;
  }();
  return d;
}

TrainRequest request(const std::string &kind) {
  TrainRequest r;
  r.kind = kind;
  r.name = kind + "-test";
  r.linear.epochs = 3;
  r.snn.hidden = {8};
  r.snn.train.epochs = 2;
  r.k = 3;
  r.seed = 7;
  return r;
}

std::string temp_dir(const std::string &name) {
  auto p = fs::path(::testing::TempDir()) / ("artifact_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

class ArtifactRoundTrip: public ::testing::TestWithParam<std::string> {};

TEST_P(ArtifactRoundTrip, LoadsAndPredictsIdentically) {
  const auto &d = data();
  auto a = train_artifact(d.x, d.truth, request(GetParam()));
  auto dir = temp_dir(GetParam());
  save_artifact(dir, a);
  auto b = load_artifact(dir);
  EXPECT_EQ(b.name, a.name);
  EXPECT_EQ(model_kind(b.model), GetParam());
  EXPECT_EQ(predict_proba(b.model, b.pipeline.apply(d.x)), predict_proba(a.model, a.pipeline.apply(d.x)));
  EXPECT_EQ(encode_weights(b.model), encode_weights(a.model));

  // Same seed, same bytes.
  auto again = temp_dir(GetParam() + "_again");
  save_artifact(again, train_artifact(d.x, d.truth, request(GetParam())));
  for (const char *f: {"manifest.json", "weights.bin", "pipeline.bin"})
    EXPECT_EQ(read_file(dir + "/" + f), read_file(again + "/" + f)) << f;
}

INSTANTIATE_TEST_SUITE_P(Kinds, ArtifactRoundTrip, ::testing::Values("linear", "snn", "knn"));

TEST(Artifact, WeightsHeader) {
  auto a = train_artifact(data().x, data().truth, request("linear"));
  auto bytes = encode_weights(a.model);
  EXPECT_EQ(bytes.substr(0, 8), "TBXWGHT1");
  EXPECT_GE(bytes.size(), 16u);
}

TEST(Artifact, IntegrityFailures) {
  auto a = train_artifact(data().x, data().truth, request("linear"));
  auto dir = temp_dir("tamper");
  save_artifact(dir, a);

  auto manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  auto original = manifest.dump(2) + "\n";
  manifest["pipeline_hash"] = "0000000000000000";
  write_file(dir + "/manifest.json", manifest.dump(2));
  EXPECT_THROW(load_artifact(dir), ArtifactError);
  write_file(dir + "/manifest.json", original);
  EXPECT_NO_THROW(load_artifact(dir));

  auto weights = read_file(dir + "/weights.bin");
  write_file(dir + "/weights.bin", weights.substr(0, weights.size() - 100));
  try {
    load_artifact(dir);
    FAIL();
  } catch (const ArtifactError &e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
  }
  write_file(dir + "/weights.bin", weights);

  fs::remove(dir + "/pipeline.bin");
  EXPECT_THROW(load_artifact(dir), ArtifactError);
}

TEST(Artifact, MismatchedPipelineRefused) {
  auto lin = train_artifact(data().x, data().truth, request("linear"));
  auto knn = train_artifact(data().x, data().truth, request("knn"));
  auto dir = temp_dir("swap");
  save_artifact(dir, lin);
  auto other = temp_dir("swap_other");
  save_artifact(other, knn);
  fs::copy_file(other + "/pipeline.bin", dir + "/pipeline.bin", fs::copy_options::overwrite_existing);
  EXPECT_THROW(load_artifact(dir), ArtifactError);
}

TEST(Workflow, RequestValidation) {
  auto r = request("forest");
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = request("knn");
  r.k = 0;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  EXPECT_THROW(train_artifact(Matrix(2, 9385), data().truth, request("linear")), std::invalid_argument);
}
