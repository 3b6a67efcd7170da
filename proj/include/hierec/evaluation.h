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

// Impression-level ranking evaluation and the multi-channel recall task.

#ifndef HIEREC_EVALUATION_H_
#define HIEREC_EVALUATION_H_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierec/data_ingest.h"
#include "hierec/interest_hierarchy.h"
#include "hierec/matching.h"
#include "hierec/model.h"

namespace hierec {

struct ImpressionScores {
  std::vector<int> labels;
  std::vector<double> scores;
};

// Means are reported x100. Impressions lacking a positive or a negative are
// excluded from every metric and counted in n_excluded.
struct MetricsReport {
  double auc = 0.0;
  double mrr = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  int n_impressions = 0;
  int n_excluded = 0;
  // Impressions whose positive count exceeds K, where the nDCG normalizer
  // is larger than any reachable DCG.
  int ndcg5_unreachable = 0;
  int ndcg10_unreachable = 0;
  // Per retained impression, as fractions; kept for significance tests.
  std::vector<double> auc_values;
  std::vector<double> mrr_values;
  std::vector<double> ndcg5_values;
  std::vector<double> ndcg10_values;

  nlohmann::json ToJson(bool per_impression = false) const;
};

MetricsReport ComputeMetrics(std::span<const ImpressionScores> impressions,
                             bool tie_half = false);

// Per-candidate score components, independent of the lambdas and masks.
struct CachedImpression {
  std::vector<int> labels;
  std::vector<ScoreBreakdown> breakdowns;
};

struct EvaluationCache {
  std::vector<CachedImpression> impressions;
  int missing_candidates = 0;  // candidate ids absent from the catalog
};

// Encodes the catalog once, builds each impression's tree once and stores
// every candidate's breakdown. Parallel over impressions.
EvaluationCache BuildEvaluationCache(const Catalog& catalog,
                                     std::span<const Impression> impressions,
                                     const ModelParams& params);
EvaluationCache BuildEvaluationCache(const Catalog& catalog,
                                     const Matrix& news_vectors,
                                     std::span<const Impression> impressions,
                                     const ModelParams& params);

// Recombines cached components with new lambdas/masks.
std::vector<ImpressionScores> Rescore(const EvaluationCache& cache,
                                      const MatchConfig& config);

MetricsReport EvaluateRanking(const Catalog& catalog,
                              std::span<const Impression> impressions,
                              const ModelParams& params,
                              const MatchConfig& config, bool tie_half = false);

// Round-robin merge: each channel in turn contributes its best item not yet
// taken, until k distinct items are collected or every channel runs dry.
std::vector<int> MergeChannels(std::span<const std::vector<int>> rankings,
                               int k);

// Pool indices recalled by one channel per clicked subtopic (index order),
// falling back to the user vector when there are none. `truncated` is set
// when the pool holds fewer than k items.
std::vector<int> MultiChannelRecall(const InterestTree& tree,
                                    const InterestIndex& index,
                                    const Matrix& pool, int k,
                                    bool* truncated = nullptr);
// Top-k of the pool by dot product with the user vector.
std::vector<int> SingleChannelRecall(const InterestTree& tree,
                                     const Matrix& pool, int k,
                                     bool* truncated = nullptr);

struct RecallConfig {
  std::vector<int> ks = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  // false: pool = full catalog; true: the impression's own candidates.
  bool impression_pool = false;
  int max_impressions = 0;  // 0 = all

  void Validate() const;
};

struct RecallReport {
  std::vector<int> ks;
  std::vector<double> multi_recall;  // x100, macro average over impressions
  std::vector<double> single_recall;
  std::vector<double> multi_ilad;
  std::vector<double> single_ilad;
  double mean_channels = 0.0;
  int n_impressions = 0;
  int n_truncated = 0;

  nlohmann::json ToJson() const;
  std::string ToCsv() const;
};

// Impressions without a clicked candidate are skipped.
RecallReport EvaluateRecall(const Catalog& catalog,
                            std::span<const Impression> impressions,
                            const ModelParams& params,
                            const RecallConfig& config);

}  // namespace hierec

#endif  // HIEREC_EVALUATION_H_
