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

#include "hierec/training.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hierec/evaluation.h"
#include "hierec/experiment.h"
#include "hierec/news_encoder.h"
#include "test_util.h"

namespace hierec {
namespace {

namespace fs = std::filesystem;
using ::hierec::testing::MakeTinyWorld;
using ::hierec::testing::TinyConfig;
using ::hierec::testing::TinySpec;

TEST(NceLossTest, Examples) {
  EXPECT_NEAR(NceLoss(0.3, std::vector<double>{0.3}), std::log(2.0), 1e-15);
  EXPECT_NEAR(NceLoss(1.0, std::vector<double>{0.0, 0.0}), 0.551445, 1e-6);
  EXPECT_NEAR(NceLoss(1.0, std::vector<double>{0.0, 0.0}),
              std::log((std::exp(1.0) + 2.0) / std::exp(1.0)), 1e-15);
  EXPECT_NEAR(NceLoss(2.0, std::vector<double>(4, 2.0)), std::log(5.0), 1e-15);
}

TEST(NceLossTest, DecreasesToZeroAsThePositiveGrows) {
  const std::vector<double> negs = {0.5, -1.0, 2.0};
  double last = std::numeric_limits<double>::infinity();
  for (double pos = -5; pos <= 60; pos += 0.5) {
    const double l = NceLoss(pos, negs);
    EXPECT_GT(l, 0.0);
    EXPECT_LE(l, last);
    last = l;
  }
  EXPECT_LT(last, 1e-20);
}

TEST(NceLossTest, ShiftInvariantAndOverflowSafe) {
  const std::vector<double> negs = {0.5, -1.0, 2.0};
  const double base = NceLoss(1.0, negs);
  for (const double c : {-700.0, -3.0, 10.0, 800.0}) {
    std::vector<double> shifted = negs;
    for (double& n : shifted) n += c;
    EXPECT_NEAR(NceLoss(1.0 + c, shifted), base, 1e-9);
  }
}

TEST(NceLossTest, Errors) {
  EXPECT_THROW(NceLoss(1.0, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(NceLoss(NAN, std::vector<double>{0.0}), std::domain_error);
  EXPECT_THROW(NceLoss(0.0, std::vector<double>{INFINITY}), std::domain_error);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.negatives = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig{};
  c.match.lambda_s = 0.95;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

class SampleTest : public ::testing::Test {
 protected:
  SampleTest()
      : inst_(MakeGradientCheckInstance(/*dim=*/8, /*scale=*/0.7, /*seed=*/1)) {}
  GradientCheckInstance inst_;
};

TEST_F(SampleTest, LossEqualsNceOfInferenceScores) {
  const TrainingSample& s = inst_.sample;
  const InterestTree tree = BuildInterestTree(*s.index, inst_.catalog, inst_.params);
  const MatchConfig cfg;
  const double pos =
      ScoreCandidate(inst_.catalog[s.positive], tree, *s.index, inst_.params, cfg).o;
  std::vector<double> negs;
  for (const int n : s.negatives) {
    negs.push_back(
        ScoreCandidate(inst_.catalog[n], tree, *s.index, inst_.params, cfg).o);
  }
  EXPECT_NEAR(EvaluateSampleLoss(s, inst_.catalog, inst_.params, cfg),
              NceLoss(pos, negs), 1e-12);
}

TEST_F(SampleTest, InstanceCoversZeroRules) {
  const TrainingSample& s = inst_.sample;
  const InterestIndex& idx = *s.index;
  bool unclicked_topic = false, unclicked_sub_in_clicked_topic = false;
  for (const int n : s.negatives) {
    const NewsArticle& a = inst_.catalog[n];
    if (idx.FindTopic(a.topic_id) == nullptr) unclicked_topic = true;
    if (idx.FindTopic(a.topic_id) && !idx.FindSubtopic(a.subtopic_id)) {
      unclicked_sub_in_clicked_topic = true;
    }
  }
  EXPECT_TRUE(unclicked_topic);
  EXPECT_TRUE(unclicked_sub_in_clicked_topic);
  // Distinct counts inside every attention group.
  for (const TopicGroup& t : idx.topics) {
    for (size_t i = 1; i < t.subtopics.size(); ++i) {
      EXPECT_NE(t.subtopics[i].count, t.subtopics[i - 1].count);
    }
  }
}

TEST_F(SampleTest, GradientCheckPassesOnTheTinyModel) {
  const GradientCheckReport r = GradientCheck(inst_.params, inst_.sample,
                                              inst_.catalog, MatchConfig{}, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-3)
      << r.worst_parameter << "[" << r.worst_index << "] analytic "
      << r.worst_analytic << " numeric " << r.worst_numeric;
  EXPECT_EQ(r.scalars_checked, inst_.params.NumScalars());
  EXPECT_EQ(r.per_parameter.size(), inst_.params.All().size());
}

TEST_F(SampleTest, GradientCheckPassesUnderEveryMask) {
  for (const MatchConfig& m : AblationMasks(MatchConfig{})) {
    const GradientCheckReport r =
        GradientCheck(inst_.params, inst_.sample, inst_.catalog, m, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-3) << m.MaskName() << " " << r.worst_parameter;
  }
}

TEST_F(SampleTest, UnusedRowsHaveExactlyZeroGradient) {
  Graph g;
  g.Backward(SampleLoss(g, inst_.sample, inst_.catalog, inst_.params,
                        MatchConfig{}, nullptr));
  GradientBuffer grads(inst_.params);
  grads.Accumulate(g, 1.0);
  const Matrix& sub = grads[inst_.params.subtopic_embeddings];
  for (int row = 0; row < sub.rows(); ++row) {
    const bool clicked = inst_.sample.index->FindSubtopic(row) != nullptr;
    double norm = 0;
    for (const Real x : sub.row(row)) norm += std::abs(x);
    if (clicked) {
      EXPECT_GT(norm, 0.0) << row;
    } else {
      EXPECT_EQ(norm, 0.0) << row;
    }
  }
  // The finite difference agrees on an unused row.
  ModelParams probe = inst_.params;
  const int unused = 5;  // never clicked
  ASSERT_EQ(inst_.sample.index->FindSubtopic(unused), nullptr);
  probe.subtopic_embeddings.value(unused, 0) += 1e-3;
  EXPECT_EQ(EvaluateSampleLoss(inst_.sample, inst_.catalog, probe, MatchConfig{}),
            EvaluateSampleLoss(inst_.sample, inst_.catalog, inst_.params,
                               MatchConfig{}));
}

TEST_F(SampleTest, MaskedLevelsReceiveNoGradient) {
  MatchConfig sub_only;
  sub_only.use_topic = false;
  sub_only.use_user = false;
  Graph g;
  g.Backward(SampleLoss(g, inst_.sample, inst_.catalog, inst_.params, sub_only,
                        nullptr));
  GradientBuffer grads(inst_.params);
  grads.Accumulate(g, 1.0);
  auto norm = [&](const Parameter& p) {
    double s = 0;
    for (const Real x : grads[p].data()) s += std::abs(x);
    return s;
  };
  EXPECT_EQ(norm(inst_.params.topic_embeddings), 0.0);
  EXPECT_EQ(norm(inst_.params.topic_scorer.weight), 0.0);
  EXPECT_EQ(norm(inst_.params.user_scorer.weight), 0.0);
  EXPECT_EQ(norm(inst_.params.topic_count_embeddings), 0.0);
  EXPECT_EQ(norm(inst_.params.subtopic_count_embeddings), 0.0);
  EXPECT_GT(norm(inst_.params.subtopic_embeddings), 0.0);
  EXPECT_GT(norm(inst_.params.subtopic_scorer.weight), 0.0);

  // With only the user level, the tree is still trained through u^g.
  MatchConfig user_only;
  user_only.use_topic = false;
  user_only.use_subtopic = false;
  Graph gu;
  gu.Backward(SampleLoss(gu, inst_.sample, inst_.catalog, inst_.params,
                         user_only, nullptr));
  GradientBuffer ug(inst_.params);
  ug.Accumulate(gu, 1.0);
  double s = 0;
  for (const Real x : ug[inst_.params.subtopic_embeddings].data()) s += std::abs(x);
  EXPECT_GT(s, 0.0);
}

TEST_F(SampleTest, OneSmallStepDecreasesTheSampleLoss) {
  ModelParams p = inst_.params;
  const double before = EvaluateSampleLoss(inst_.sample, inst_.catalog, p, {});
  Graph g;
  g.Backward(SampleLoss(g, inst_.sample, inst_.catalog, p, {}, nullptr));
  GradientBuffer grads(p);
  grads.Accumulate(g, 1.0);
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  AdamOptimizer adam(p, cfg);
  adam.Step(grads, &p);
  EXPECT_EQ(adam.steps(), 1);
  EXPECT_LT(EvaluateSampleLoss(inst_.sample, inst_.catalog, p, {}), before);
}

TEST_F(SampleTest, BufferNormScaleAndFrozenWords) {
  ModelParams p = inst_.params;
  Graph g;
  g.Backward(SampleLoss(g, inst_.sample, inst_.catalog, p, {}, nullptr));
  GradientBuffer grads(p);
  grads.Accumulate(g, 1.0);
  const double n = grads.GlobalNorm();
  EXPECT_GT(n, 0.0);
  grads.Scale(0.5);
  EXPECT_NEAR(grads.GlobalNorm(), 0.5 * n, 1e-12 * n);

  TrainConfig cfg;
  cfg.freeze_word_embeddings = true;
  AdamOptimizer adam(p, cfg);
  const Matrix words = p.word_embeddings.value;
  const Matrix fusion = p.text_fusion.value;
  adam.Step(grads, &p);
  EXPECT_EQ(p.word_embeddings.value, words);
  EXPECT_NE(p.text_fusion.value, fusion);
  grads.SetZero();
  EXPECT_EQ(grads.GlobalNorm(), 0.0);
}

TEST(GradientCheckTest, HalvingEpsilonKeepsTheCheckPassing) {
  const GradientCheckInstance inst = MakeGradientCheckInstance(8, 0.7, 2);
  for (const double eps : {1e-5, 5e-6}) {
    const GradientCheckReport r =
        GradientCheck(inst.params, inst.sample, inst.catalog, {}, eps);
    EXPECT_LT(r.max_relative_error, 1e-3) << eps;
  }
}

class TrainTest : public ::testing::Test {
 protected:
  TrainTest() {
    SyntheticSpec spec = TinySpec(6);
    spec.n_users = 25;
    spec.dev_impressions_per_user = 1;
    corpus_ = GenerateSynthetic(spec);
    BuildCatalog(corpus_, &vocab_, &catalog_);
    config_ = TinyConfig(vocab_.num_words(), vocab_.num_entities(),
                         vocab_.num_topics(), vocab_.num_subtopics());
    train_cfg_.epochs = 30;
    train_cfg_.learning_rate = 3e-3;
    train_cfg_.batch_size = 8;
    train_cfg_.seed = 5;
  }

  SyntheticCorpus corpus_;
  Vocabulary vocab_;
  Catalog catalog_;
  ModelConfig config_;
  TrainConfig train_cfg_;
};

TEST_F(TrainTest, OverfitsFiftySamples) {
  ASSERT_EQ(corpus_.train.size(), 50u);
  ModelParams params = InitModel(config_, 1);
  const TrainReport r =
      Train(catalog_, corpus_.train, {}, train_cfg_, &params);
  ASSERT_EQ(r.epochs.size(), 30u);
  EXPECT_EQ(r.epochs[0].samples, 50);
  EXPECT_LT(r.epochs.back().mean_loss, 0.5 * r.epochs.front().mean_loss);
  for (const EpochLog& e : r.epochs) EXPECT_TRUE(std::isfinite(e.mean_loss));
  EXPECT_EQ(r.best_epoch, 30);
}

TEST_F(TrainTest, DeterministicInTheSeedAndKeepsTheBestEpoch) {
  train_cfg_.epochs = 4;
  const fs::path dir = fs::temp_directory_path() / "hierec_train_test";
  fs::remove_all(dir);
  auto run = [&](uint64_t seed, const std::string& tag, TrainReport* report) {
    ModelParams p = InitModel(config_, 1);
    TrainConfig cfg = train_cfg_;
    cfg.seed = seed;
    TrainOptions opts;
    opts.checkpoint_path = dir / (tag + ".ckpt");
    opts.log_path = dir / (tag + ".jsonl");
    int calls = 0;
    opts.on_epoch = [&](const EpochLog&) { ++calls; };
    *report = Train(catalog_, corpus_.train, corpus_.dev, cfg, &p, opts);
    EXPECT_EQ(calls, 4);
    return p;
  };
  TrainReport ra, rb, rc;
  const ModelParams a = run(5, "a", &ra);
  const ModelParams b = run(5, "b", &rb);
  const ModelParams c = run(6, "c", &rc);
  for (size_t i = 0; i < ra.epochs.size(); ++i) {
    EXPECT_EQ(ra.epochs[i].mean_loss, rb.epochs[i].mean_loss);
    EXPECT_EQ(ra.epochs[i].val_auc, rb.epochs[i].val_auc);
  }
  EXPECT_NE(ra.epochs.back().mean_loss, rc.epochs.back().mean_loss);
  EXPECT_EQ(a.word_embeddings.value, b.word_embeddings.value);

  // The returned parameters are the best-validation epoch's checkpoint.
  double best = -1;
  for (const EpochLog& e : ra.epochs) best = std::max(best, e.val_auc);
  EXPECT_EQ(ra.best_val_auc, best);
  EXPECT_EQ(ra.epochs[ra.best_epoch - 1].val_auc, best);
  const ModelParams loaded = LoadCheckpoint(dir / "a.ckpt");
  EXPECT_EQ(loaded.text_fusion.value, a.text_fusion.value);
  const MetricsReport m = EvaluateRanking(catalog_, corpus_.dev, a, {});
  EXPECT_NEAR(m.auc, best, 1e-9);

  std::ifstream log(dir / "a.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    const nlohmann::json j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("loss"));
    EXPECT_TRUE(j.contains("val_auc"));
    ++lines;
  }
  EXPECT_EQ(lines, 4);
}

}  // namespace
}  // namespace hierec
