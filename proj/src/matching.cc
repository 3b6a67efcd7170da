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

#include "hierec/matching.h"

#include <stdexcept>
#include <vector>

#include "hierec/news_encoder.h"

namespace hierec {

void MatchConfig::Validate() const {
  if (!(lambda_s > 0.0) || !(lambda_t > 0.0) || !(lambda_s + lambda_t < 1.0)) {
    throw std::invalid_argument(
        "match config: need lambda_s > 0, lambda_t > 0, lambda_s + lambda_t < 1");
  }
  if (!use_subtopic && !use_topic && !use_user) {
    throw std::invalid_argument("match config: every score level is masked");
  }
}

std::string MatchConfig::MaskName() const {
  if (use_user && use_topic && use_subtopic) return "full";
  std::string name;
  auto add = [&name](const char* part) {
    if (!name.empty()) name += '+';
    name += part;
  };
  if (use_user) add("user");
  if (use_topic) add("topic");
  if (use_subtopic) add("subtopic");
  return name;
}

nlohmann::json ToJson(const ScoreBreakdown& b) {
  return {{"o_g", b.o_g}, {"o_t_raw", b.o_t_raw}, {"o_s_raw", b.o_s_raw},
          {"w_t", b.w_t}, {"w_s", b.w_s},         {"o_t", b.o_t},
          {"o_s", b.o_s}, {"o", b.o}};
}

double UserLevelScore(std::span<const Real> candidate, const InterestTree& tree) {
  if (tree.cold_start) return 0.0;
  return Dot(candidate, tree.user);
}

LevelScore TopicLevelScore(std::span<const Real> candidate, int topic_id,
                           const InterestTree& tree, const InterestIndex& index) {
  const TopicGroup* group = index.FindTopic(topic_id);
  auto rep = tree.topic_reps.find(topic_id);
  if (group == nullptr || rep == tree.topic_reps.end()) return {};
  LevelScore s;
  s.raw = Dot(candidate, rep->second);
  s.ratio = group->ratio;
  s.score = s.raw * s.ratio;
  return s;
}

LevelScore SubtopicLevelScore(std::span<const Real> candidate, int subtopic_id,
                              const InterestTree& tree,
                              const InterestIndex& index) {
  const SubtopicGroup* group = index.FindSubtopic(subtopic_id);
  auto rep = tree.subtopic_reps.find(subtopic_id);
  if (group == nullptr || rep == tree.subtopic_reps.end()) return {};
  LevelScore s;
  s.raw = Dot(candidate, rep->second);
  s.ratio = group->ratio;
  s.score = s.raw * s.ratio;
  return s;
}

double CombineScores(double o_s, double o_t, double o_g,
                     const MatchConfig& config) {
  double o = 0.0;
  if (config.use_subtopic) o += config.lambda_s * o_s;
  if (config.use_topic) o += config.lambda_t * o_t;
  if (config.use_user) o += (1.0 - config.lambda_s - config.lambda_t) * o_g;
  return o;
}

ScoreBreakdown ScoreCandidateVector(std::span<const Real> candidate, int topic_id,
                                    int subtopic_id, const InterestTree& tree,
                                    const InterestIndex& index,
                                    const MatchConfig& config) {
  ScoreBreakdown b;
  b.o_g = UserLevelScore(candidate, tree);
  const LevelScore t = TopicLevelScore(candidate, topic_id, tree, index);
  const LevelScore s = SubtopicLevelScore(candidate, subtopic_id, tree, index);
  b.o_t_raw = t.raw;
  b.w_t = t.ratio;
  b.o_t = t.score;
  b.o_s_raw = s.raw;
  b.w_s = s.ratio;
  b.o_s = s.score;
  b.o = CombineScores(b.o_s, b.o_t, b.o_g, config);
  return b;
}

ScoreBreakdown ScoreCandidate(const NewsArticle& article, const InterestTree& tree,
                              const InterestIndex& index,
                              const ModelParams& params,
                              const MatchConfig& config) {
  const Vector n = EncodeNewsVector(article, params);
  return ScoreCandidateVector(n, article.topic_id, article.subtopic_id, tree,
                              index, config);
}

Var ScoreCandidateGraph(Graph& g, Var candidate, int topic_id, int subtopic_id,
                        const InterestTreeVars& tree, const InterestIndex& index,
                        const MatchConfig& config) {
  std::vector<Var> terms;
  if (config.use_subtopic) {
    const SubtopicGroup* group = index.FindSubtopic(subtopic_id);
    const SubtopicVars* rep = tree.FindSubtopic(subtopic_id);
    if (group != nullptr && rep != nullptr) {
      Var raw = g.DotProduct(candidate, rep->out.rep);
      terms.push_back(g.Scale(raw, config.lambda_s * group->ratio));
    }
  }
  if (config.use_topic) {
    const TopicGroup* group = index.FindTopic(topic_id);
    const TopicVars* rep = tree.FindTopic(topic_id);
    if (group != nullptr && rep != nullptr) {
      Var raw = g.DotProduct(candidate, rep->out.rep);
      terms.push_back(g.Scale(raw, config.lambda_t * group->ratio));
    }
  }
  if (config.use_user && !tree.cold_start) {
    Var raw = g.DotProduct(candidate, tree.user);
    terms.push_back(
        g.Scale(raw, 1.0 - config.lambda_s - config.lambda_t));
  }
  if (terms.empty()) return g.Input(Matrix(1, 1));
  Var o = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) o = g.Add(o, terms[i]);
  return o;
}

}  // namespace hierec
