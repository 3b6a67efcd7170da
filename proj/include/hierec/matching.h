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

// Hierarchical matching of a candidate against an interest tree:
//   o_g = n . u^g
//   o_t = (n . u^t_{t_c}) * w_{t_c}, or 0 if t_c was never clicked
//   o_s = (n . u^s_{s_c}) * w_{s_c}, or 0 if s_c was never clicked
//   o   = l_s o_s + l_t o_t + (1 - l_s - l_t) o_g

#ifndef HIEREC_MATCHING_H_
#define HIEREC_MATCHING_H_

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "hierec/autodiff.h"
#include "hierec/data_ingest.h"
#include "hierec/interest_hierarchy.h"
#include "hierec/model.h"

namespace hierec {

struct MatchConfig {
  double lambda_s = 0.7;
  double lambda_t = 0.15;
  // Ablation switches. A disabled level contributes 0; the remaining
  // coefficients are not renormalized.
  bool use_subtopic = true;
  bool use_topic = true;
  bool use_user = true;

  // Throws std::invalid_argument unless l_s, l_t > 0, l_s + l_t < 1 and at
  // least one level is enabled.
  void Validate() const;
  // "full", "user", "user+topic", ...
  std::string MaskName() const;
};

struct LevelScore {
  double raw = 0.0;
  double ratio = 0.0;
  double score = 0.0;
};

struct ScoreBreakdown {
  double o_g = 0.0;
  double o_t_raw = 0.0;
  double o_s_raw = 0.0;
  double w_t = 0.0;
  double w_s = 0.0;
  double o_t = 0.0;
  double o_s = 0.0;
  double o = 0.0;
};

nlohmann::json ToJson(const ScoreBreakdown& b);

double UserLevelScore(std::span<const Real> candidate, const InterestTree& tree);
LevelScore TopicLevelScore(std::span<const Real> candidate, int topic_id,
                           const InterestTree& tree, const InterestIndex& index);
LevelScore SubtopicLevelScore(std::span<const Real> candidate, int subtopic_id,
                              const InterestTree& tree,
                              const InterestIndex& index);
double CombineScores(double o_s, double o_t, double o_g,
                     const MatchConfig& config);

ScoreBreakdown ScoreCandidateVector(std::span<const Real> candidate, int topic_id,
                                    int subtopic_id, const InterestTree& tree,
                                    const InterestIndex& index,
                                    const MatchConfig& config);
// Encodes the candidate with dropout off, then scores it.
ScoreBreakdown ScoreCandidate(const NewsArticle& article, const InterestTree& tree,
                              const InterestIndex& index,
                              const ModelParams& params,
                              const MatchConfig& config);

// Differentiable score o (1 x 1). Disabled levels are not built at all.
Var ScoreCandidateGraph(Graph& g, Var candidate, int topic_id, int subtopic_id,
                        const InterestTreeVars& tree, const InterestIndex& index,
                        const MatchConfig& config);

}  // namespace hierec

#endif  // HIEREC_MATCHING_H_
