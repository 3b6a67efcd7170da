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

#include "hierec/evaluation.h"

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hierec/metrics.h"
#include "hierec/news_encoder.h"
#include "test_util.h"

namespace hierec {
namespace {

using ::hierec::testing::MakeTinyWorld;
using ::hierec::testing::RandomMatrix;
using ::hierec::testing::TinyWorld;

TEST(ComputeMetricsTest, ExcludesOneClassImpressions) {
  const std::vector<ImpressionScores> imps = {
      {{1, 0, 0}, {0.9, 0.1, 0.2}},
      {{1, 1}, {0.3, 0.4}},
      {{0, 0, 0}, {0.1, 0.2, 0.3}},
      {{0, 1}, {0.9, 0.1}},
  };
  const MetricsReport r = ComputeMetrics(imps);
  EXPECT_EQ(r.n_impressions, 2);
  EXPECT_EQ(r.n_excluded, 2);
  EXPECT_DOUBLE_EQ(r.auc, 50.0);
  EXPECT_DOUBLE_EQ(r.mrr, 75.0);
  EXPECT_EQ(r.auc_values.size(), 2u);
}

TEST(ComputeMetricsTest, OracleAndAntiOracle) {
  std::mt19937_64 rng(1);
  std::vector<ImpressionScores> oracle, anti;
  for (int i = 0; i < 200; ++i) {
    ImpressionScores s;
    const int n = 2 + static_cast<int>(rng() % 15);
    for (int j = 0; j < n; ++j) s.labels.push_back(j == 0 || rng() % 4 == 0);
    s.labels[1] = 0;
    for (const int l : s.labels) s.scores.push_back(l + 0.01 * (rng() % 50));
    oracle.push_back(s);
    for (double& x : s.scores) x = -x;
    anti.push_back(s);
  }
  const MetricsReport good = ComputeMetrics(oracle);
  EXPECT_DOUBLE_EQ(good.auc, 100.0);
  EXPECT_DOUBLE_EQ(good.ndcg10, 100.0);
  EXPECT_EQ(ComputeMetrics(anti).auc, 0.0);
}

TEST(ComputeMetricsTest, RandomScoresGiveChanceAuc) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ImpressionScores> imps(10000);
  for (ImpressionScores& s : imps) {
    for (int j = 0; j < 10; ++j) {
      s.labels.push_back(j < 2);
      s.scores.push_back(u(rng));
    }
  }
  EXPECT_NEAR(ComputeMetrics(imps).auc, 50.0, 1.5);
}

TEST(ComputeMetricsTest, TieHalfOnlyChangesTies) {
  const std::vector<ImpressionScores> imps = {{{1, 0, 0}, {0.5, 0.5, 0.1}}};
  EXPECT_DOUBLE_EQ(ComputeMetrics(imps, false).auc, 50.0);
  EXPECT_DOUBLE_EQ(ComputeMetrics(imps, true).auc, 75.0);
}

TEST(MergeChannelsTest, DisjointChannelsAlternate) {
  const std::vector<std::vector<int>> r = {{1, 2, 3}, {10, 20, 30}};
  EXPECT_EQ(MergeChannels(r, 4), (std::vector<int>{1, 10, 2, 20}));
  EXPECT_EQ(MergeChannels(r, 100), (std::vector<int>{1, 10, 2, 20, 3, 30}));
}

TEST(MergeChannelsTest, IdenticalChannelsGiveTheSharedPrefix) {
  const std::vector<std::vector<int>> r = {{5, 4, 3, 2, 1}, {5, 4, 3, 2, 1}};
  EXPECT_EQ(MergeChannels(r, 4), (std::vector<int>{5, 4, 3, 2}));
}

TEST(MergeChannelsTest, OverlapIsSkipped) {
  const std::vector<std::vector<int>> r = {{1, 2, 3}, {1, 3, 4}, {}};
  EXPECT_EQ(MergeChannels(r, 4), (std::vector<int>{1, 3, 2, 4}));
  EXPECT_TRUE(MergeChannels(r, 0).empty());
}

class RecallTest : public ::testing::Test {
 protected:
  void SetUp() override {
    world_ = MakeTinyWorld(5);
    vectors_ = EncodeCatalog(world_.catalog, world_.params);
  }
  TinyWorld world_;
  Matrix vectors_;
};

TEST_F(RecallTest, RecalledSetsAreDistinctAndNested) {
  for (const Impression& imp : world_.corpus.dev) {
    const InterestIndex index = BuildInterestIndex(imp.history, world_.catalog);
    const InterestTree tree =
        BuildInterestTreeFromVectors(index, vectors_, world_.params);
    std::vector<int> prev;
    for (const int k : {1, 5, 17, 40, 72, 500}) {
      bool truncated = false;
      const std::vector<int> r =
          MultiChannelRecall(tree, index, vectors_, k, &truncated);
      EXPECT_EQ(static_cast<int>(r.size()), std::min(k, vectors_.rows()));
      EXPECT_EQ(truncated, k > vectors_.rows());
      EXPECT_EQ(std::set<int>(r.begin(), r.end()).size(), r.size());
      EXPECT_TRUE(std::equal(prev.begin(), prev.end(), r.begin()));
      prev = r;
      const std::vector<int> s = SingleChannelRecall(tree, vectors_, k);
      EXPECT_EQ(s.size(), r.size());
    }
  }
}

TEST_F(RecallTest, SingleChannelIsTopKByUserScore) {
  const Impression& imp = world_.corpus.dev.front();
  const InterestIndex index = BuildInterestIndex(imp.history, world_.catalog);
  const InterestTree tree = BuildInterestTreeFromVectors(index, vectors_, world_.params);
  const std::vector<int> top = SingleChannelRecall(tree, vectors_, 10);
  auto score = [&](int i) {
    double s = 0;
    for (int d = 0; d < vectors_.cols(); ++d) s += vectors_(i, d) * tree.user[d];
    return s;
  };
  for (size_t j = 1; j < top.size(); ++j) EXPECT_GE(score(top[j - 1]), score(top[j]));
  for (int i = 0; i < vectors_.rows(); ++i) {
    if (std::find(top.begin(), top.end(), i) == top.end()) {
      EXPECT_LE(score(i), score(top.back()));
    }
  }
}

TEST_F(RecallTest, SingleClickedSubtopicMatchesItsChannel) {
  // With one channel, multi-channel recall is that channel's ranking.
  Impression imp = world_.corpus.dev.front();
  imp.history.assign(3, imp.history.front());
  const InterestIndex index = BuildInterestIndex(imp.history, world_.catalog);
  ASSERT_EQ(index.num_subtopics(), 1);
  const InterestTree tree = BuildInterestTreeFromVectors(index, vectors_, world_.params);
  InterestTree only_sub = tree;
  only_sub.user = tree.subtopic_reps.begin()->second;
  EXPECT_EQ(MultiChannelRecall(tree, index, vectors_, 30),
            SingleChannelRecall(only_sub, vectors_, 30));
}

TEST_F(RecallTest, ReportShapes) {
  RecallConfig config;
  config.ks = {5, 10, 20};
  const RecallReport r =
      EvaluateRecall(world_.catalog, world_.corpus.dev, world_.params, config);
  EXPECT_EQ(r.multi_recall.size(), 3u);
  EXPECT_GT(r.n_impressions, 0);
  for (size_t j = 0; j < 3; ++j) {
    EXPECT_GE(r.multi_recall[j], 0.0);
    EXPECT_LE(r.multi_recall[j], 100.0);
    if (j > 0) EXPECT_GE(r.multi_recall[j], r.multi_recall[j - 1]);
    if (j > 0) EXPECT_GE(r.single_recall[j], r.single_recall[j - 1]);
  }
  EXPECT_NE(r.ToCsv().find("multi"), std::string::npos);
  config.ks = {10, 5};
  EXPECT_THROW(config.Validate(), std::invalid_argument);
}

TEST(RescoreTest, MatchesDirectEvaluation) {
  const TinyWorld w = MakeTinyWorld(6);
  const EvaluationCache cache =
      BuildEvaluationCache(w.catalog, w.corpus.dev, w.params);
  EXPECT_EQ(cache.missing_candidates, 0);
  MatchConfig config;
  for (const double ls : {0.7, 0.3}) {
    config.lambda_s = ls;
    const MetricsReport a = ComputeMetrics(Rescore(cache, config));
    const MetricsReport b = EvaluateRanking(w.catalog, w.corpus.dev, w.params, config);
    EXPECT_EQ(a.auc, b.auc);
    EXPECT_EQ(a.mrr, b.mrr);
    EXPECT_EQ(a.ndcg10, b.ndcg10);
    EXPECT_EQ(a.n_impressions, b.n_impressions);
  }
}

}  // namespace
}  // namespace hierec
