// Copyright 2026 The HieRec-cpp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hierec/model.h"

#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace hierec {
namespace {

namespace fs = std::filesystem;
using ::hierec::testing::TinyConfig;

TEST(ModelTest, ShapesFollowTheConfig) {
  ModelConfig c = TinyConfig(30, 12, 4, 9);
  c.text_heads = 3;
  c.text_head_dim = 5;
  c.entity_heads = 2;
  c.entity_head_dim = 3;
  c.count_dim = 6;
  const ModelParams p = InitModel(c, 1);
  EXPECT_EQ(p.word_embeddings.value.rows(), 30);
  EXPECT_EQ(p.text_attention.query.value.cols(), 15);
  EXPECT_EQ(p.entity_attention.value.value.cols(), 6);
  EXPECT_EQ(p.text_pool.projection.value.rows(), 15);
  EXPECT_EQ(p.text_fusion.value.rows(), 15);
  EXPECT_EQ(p.entity_fusion.value.rows(), 6);
  EXPECT_EQ(p.text_fusion.value.cols(), c.news_dim);
  EXPECT_EQ(p.subtopic_embeddings.value.rows(), 9);
  EXPECT_EQ(p.topic_count_embeddings.value.rows(), 51);
  EXPECT_EQ(p.subtopic_scorer.weight.value.rows(), c.news_dim);
  EXPECT_EQ(p.topic_scorer.weight.value.rows(), c.news_dim + 6);
  EXPECT_EQ(p.user_scorer.weight.value.rows(), c.news_dim + 6);

  std::set<std::string> names;
  size_t scalars = 0;
  for (const Parameter* q : p.All()) {
    EXPECT_TRUE(names.insert(q->name).second) << q->name;
    scalars += q->value.size();
  }
  EXPECT_EQ(p.NumScalars(), scalars);
}

TEST(ModelTest, PaddingRowsStayZero) {
  ModelParams p = InitModel(TinyConfig(10, 5, 2, 3), 4);
  for (const Real x : p.word_embeddings.value.row(0)) EXPECT_EQ(x, 0.0);
  for (const Real x : p.entity_embeddings.value.row(0)) EXPECT_EQ(x, 0.0);
  RandomizeParams(&p, 2.0, 5);
  for (const Real x : p.word_embeddings.value.row(0)) EXPECT_EQ(x, 0.0);
  for (const Real x : p.entity_embeddings.value.row(0)) EXPECT_EQ(x, 0.0);
  for (const Parameter* q : p.All()) {
    for (const Real x : q->value.data()) EXPECT_LE(std::abs(x), 2.0);
  }
}

TEST(ModelTest, InitIsDeterministic) {
  const ModelConfig c = TinyConfig(10, 5, 2, 3);
  EXPECT_EQ(InitModel(c, 9).text_fusion.value, InitModel(c, 9).text_fusion.value);
  EXPECT_NE(InitModel(c, 9).text_fusion.value, InitModel(c, 10).text_fusion.value);
}

TEST(ModelTest, ConfigValidation) {
  ModelConfig c = TinyConfig(10, 5, 2, 3);
  EXPECT_NO_THROW(c.Validate());
  c.text_heads = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TinyConfig(10, 5, 2, 3);
  nlohmann::json j = c;
  EXPECT_EQ(j.get<ModelConfig>(), c);
}

TEST(ModelTest, SetEmbeddingsChecksShapes) {
  ModelParams p = InitModel(TinyConfig(4, 3, 1, 1), 1);
  Matrix words(4, 8, 0.5), entities(3, 8, -0.5);
  SetEmbeddings(words, entities, &p);
  EXPECT_EQ(p.word_embeddings.value, words);
  EXPECT_THROW(SetEmbeddings(Matrix(5, 8), entities, &p), std::invalid_argument);
}

TEST(CheckpointTest, RoundTripsBitExactly) {
  ModelParams p = InitModel(TinyConfig(40, 9, 3, 7), 2);
  RandomizeParams(&p, 1.0, 3);
  p.text_fusion.value(0, 0) = 1.0 / 3.0;
  p.entity_fusion.value(1, 1) = -0.0;
  const fs::path path = fs::temp_directory_path() / "hierec_ckpt" / "m.ckpt";
  fs::remove_all(path.parent_path());
  SaveCheckpoint(p, path, {{"epoch", 3}});
  nlohmann::json meta;
  const ModelParams q = LoadCheckpoint(path, &meta);
  EXPECT_EQ(meta["epoch"], 3);
  EXPECT_EQ(q.config, p.config);
  const auto a = p.All();
  const auto b = q.All();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  }
  EXPECT_TRUE(std::signbit(q.entity_fusion.value(1, 1)));

  const nlohmann::json manifest = CheckpointManifest(p);
  EXPECT_EQ(manifest.size(), a.size());
}

TEST(CheckpointTest, RejectsBadFiles) {
  const fs::path dir = fs::temp_directory_path() / "hierec_ckpt_bad";
  fs::remove_all(dir);
  fs::create_directories(dir);
  EXPECT_THROW(LoadCheckpoint(dir / "absent.ckpt"), std::runtime_error);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint at all";
  EXPECT_THROW(LoadCheckpoint(dir / "junk.ckpt"), std::runtime_error);

  const ModelParams p = InitModel(TinyConfig(5, 3, 1, 1), 2);
  SaveCheckpoint(p, dir / "ok.ckpt");
  const auto size = fs::file_size(dir / "ok.ckpt");
  fs::resize_file(dir / "ok.ckpt", size - 16);
  EXPECT_THROW(LoadCheckpoint(dir / "ok.ckpt"), std::runtime_error);
}

}  // namespace
}  // namespace hierec
