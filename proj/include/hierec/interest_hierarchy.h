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

// Three-level interest tree:
//   subtopic  u^s = sum_k softmax(phi_s(n_k)) n_k + s_emb
//   topic     u^t = sum_j softmax(phi_t([u^s_j; r_j])) u^s_j + t_emb
//   user      u^g = sum_i softmax(phi_g([u^t_i; r_i])) u^t_i
// where r are click-count embeddings indexed by min(count, max_count).

#ifndef HIEREC_INTEREST_HIERARCHY_H_
#define HIEREC_INTEREST_HIERARCHY_H_

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "hierec/autodiff.h"
#include "hierec/data_ingest.h"
#include "hierec/model.h"

namespace hierec {

// `rep` is the level representation; g.aux(pool) holds the attention weights.
struct LevelOutput {
  Var rep;
  Var pool;
};

// clicks: l x D stacked news vectors (l >= 1).
LevelOutput SubtopicInterest(Graph& g, Var clicks, int subtopic_id,
                             const ModelParams& params);
// subtopic_reps: d x D (d >= 1); counts are raw click counts.
LevelOutput TopicInterest(Graph& g, Var subtopic_reps,
                          std::span<const int> counts, int topic_id,
                          const ModelParams& params);
// topic_reps: m x D (m >= 1).
LevelOutput UserInterest(Graph& g, Var topic_reps, std::span<const int> counts,
                         const ModelParams& params);

struct SubtopicVars {
  int subtopic_id = 0;
  LevelOutput out;
};

struct TopicVars {
  int topic_id = 0;
  LevelOutput out;
  std::vector<SubtopicVars> subtopics;
};

// Differentiable tree, laid out in InterestIndex order.
struct InterestTreeVars {
  Var user;          // zero input when cold start
  Var user_pool;     // invalid when cold start
  std::vector<TopicVars> topics;
  bool cold_start = false;

  const TopicVars* FindTopic(int topic_id) const;
  const SubtopicVars* FindSubtopic(int subtopic_id) const;
};

// `news_var` maps a catalog index to its 1 x D news vector node; each news is
// requested once per tree.
InterestTreeVars BuildInterestTreeGraph(Graph& g, const InterestIndex& index,
                                        const std::function<Var(int)>& news_var,
                                        const ModelParams& params);

struct InterestTree {
  Vector user;
  std::map<int, Vector> topic_reps;
  std::map<int, Vector> subtopic_reps;
  bool cold_start = false;
};

InterestTree ExtractTree(const Graph& g, const InterestTreeVars& vars);

// Encodes each clicked news once, then builds the tree.
InterestTree BuildInterestTree(const InterestIndex& index, const Catalog& catalog,
                               const ModelParams& params);
// Same, from precomputed news vectors (one row per catalog entry).
InterestTree BuildInterestTreeFromVectors(const InterestIndex& index,
                                          const Matrix& news_vectors,
                                          const ModelParams& params);

}  // namespace hierec

#endif  // HIEREC_INTEREST_HIERARCHY_H_
