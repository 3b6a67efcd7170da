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

#include "hierec/interest_hierarchy.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "hierec/news_encoder.h"

namespace hierec {
namespace {

std::vector<int> ClippedCounts(std::span<const int> counts, int max_count) {
  std::vector<int> rows;
  rows.reserve(counts.size());
  for (const int c : counts) rows.push_back(std::clamp(c, 0, max_count));
  return rows;
}

Var DenseLogits(Graph& g, Var inputs, const DenseScorer& scorer) {
  return g.MatMul(inputs, g.Param(scorer.weight));
}

// Attention over `reps` scored on [reps; count embeddings].
Var CountAwarePool(Graph& g, Var reps, std::span<const int> counts,
                   const Parameter& count_table, const DenseScorer& scorer,
                   int max_count) {
  const std::vector<int> rows = ClippedCounts(counts, max_count);
  Var scored = g.ConcatCols(reps, g.Gather(count_table, rows));
  return g.SoftmaxPool(DenseLogits(g, scored, scorer), reps);
}

}  // namespace

LevelOutput SubtopicInterest(Graph& g, Var clicks, int subtopic_id,
                             const ModelParams& params) {
  if (g.value(clicks).rows() < 1) {
    throw std::invalid_argument("SubtopicInterest: empty click group");
  }
  Var pooled =
      g.SoftmaxPool(DenseLogits(g, clicks, params.subtopic_scorer), clicks);
  const int row = subtopic_id;
  Var embedding = g.Gather(params.subtopic_embeddings, std::span<const int>(&row, 1));
  return {g.Add(pooled, embedding), pooled};
}

LevelOutput TopicInterest(Graph& g, Var subtopic_reps,
                          std::span<const int> counts, int topic_id,
                          const ModelParams& params) {
  if (g.value(subtopic_reps).rows() < 1 ||
      static_cast<int>(counts.size()) != g.value(subtopic_reps).rows()) {
    throw std::invalid_argument("TopicInterest: bad subtopic inputs");
  }
  Var pooled = CountAwarePool(g, subtopic_reps, counts,
                              params.subtopic_count_embeddings,
                              params.topic_scorer, params.config.max_count);
  const int row = topic_id;
  Var embedding = g.Gather(params.topic_embeddings, std::span<const int>(&row, 1));
  return {g.Add(pooled, embedding), pooled};
}

LevelOutput UserInterest(Graph& g, Var topic_reps, std::span<const int> counts,
                         const ModelParams& params) {
  if (g.value(topic_reps).rows() < 1 ||
      static_cast<int>(counts.size()) != g.value(topic_reps).rows()) {
    throw std::invalid_argument("UserInterest: bad topic inputs");
  }
  Var pooled = CountAwarePool(g, topic_reps, counts,
                              params.topic_count_embeddings, params.user_scorer,
                              params.config.max_count);
  return {pooled, pooled};
}

const TopicVars* InterestTreeVars::FindTopic(int topic_id) const {
  for (const TopicVars& t : topics) {
    if (t.topic_id == topic_id) return &t;
  }
  return nullptr;
}

const SubtopicVars* InterestTreeVars::FindSubtopic(int subtopic_id) const {
  for (const TopicVars& t : topics) {
    for (const SubtopicVars& s : t.subtopics) {
      if (s.subtopic_id == subtopic_id) return &s;
    }
  }
  return nullptr;
}

InterestTreeVars BuildInterestTreeGraph(Graph& g, const InterestIndex& index,
                                        const std::function<Var(int)>& news_var,
                                        const ModelParams& params) {
  InterestTreeVars tree;
  if (index.empty()) {
    tree.cold_start = true;
    tree.user = g.Input(Matrix(1, params.config.news_dim));
    return tree;
  }
  std::unordered_map<int, Var> cache;
  auto news = [&](int n) {
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Var v = news_var(n);
    cache.emplace(n, v);
    return v;
  };

  std::vector<Var> topic_reps;
  std::vector<int> topic_counts;
  for (const TopicGroup& topic : index.topics) {
    TopicVars tv;
    tv.topic_id = topic.topic_id;
    std::vector<Var> sub_reps;
    std::vector<int> sub_counts;
    for (const SubtopicGroup& sub : topic.subtopics) {
      std::vector<Var> clicks;
      clicks.reserve(sub.news.size());
      for (const int n : sub.news) clicks.push_back(news(n));
      SubtopicVars sv;
      sv.subtopic_id = sub.subtopic_id;
      sv.out = SubtopicInterest(g, g.StackRows(clicks), sub.subtopic_id, params);
      sub_reps.push_back(sv.out.rep);
      sub_counts.push_back(sub.count);
      tv.subtopics.push_back(sv);
    }
    tv.out = TopicInterest(g, g.StackRows(sub_reps), sub_counts, topic.topic_id,
                           params);
    topic_reps.push_back(tv.out.rep);
    topic_counts.push_back(topic.count);
    tree.topics.push_back(std::move(tv));
  }
  LevelOutput user = UserInterest(g, g.StackRows(topic_reps), topic_counts, params);
  tree.user = user.rep;
  tree.user_pool = user.pool;
  return tree;
}

InterestTree ExtractTree(const Graph& g, const InterestTreeVars& vars) {
  InterestTree tree;
  tree.cold_start = vars.cold_start;
  tree.user = g.value(vars.user).RowVector(0);
  for (const TopicVars& t : vars.topics) {
    tree.topic_reps.emplace(t.topic_id, g.value(t.out.rep).RowVector(0));
    for (const SubtopicVars& s : t.subtopics) {
      tree.subtopic_reps.emplace(s.subtopic_id, g.value(s.out.rep).RowVector(0));
    }
  }
  return tree;
}

InterestTree BuildInterestTree(const InterestIndex& index, const Catalog& catalog,
                               const ModelParams& params) {
  Graph g(/*record_gradients=*/false);
  InterestTreeVars vars = BuildInterestTreeGraph(
      g, index,
      [&](int n) { return EncodeNews(g, catalog[n], params, nullptr); }, params);
  return ExtractTree(g, vars);
}

InterestTree BuildInterestTreeFromVectors(const InterestIndex& index,
                                          const Matrix& news_vectors,
                                          const ModelParams& params) {
  Graph g(/*record_gradients=*/false);
  InterestTreeVars vars = BuildInterestTreeGraph(
      g, index,
      [&](int n) { return g.Input(Matrix::FromRow(news_vectors.row(n))); },
      params);
  return ExtractTree(g, vars);
}

}  // namespace hierec
