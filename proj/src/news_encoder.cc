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

#include "hierec/news_encoder.h"

#include <cmath>
#include <vector>

namespace hierec {
namespace {

Var MaybeDropout(Graph& g, Var x, const DropoutContext* dropout) {
  if (dropout == nullptr || dropout->rng == nullptr) return x;
  return g.Dropout(x, dropout->rate, *dropout->rng);
}

// Embeds the non-padding ids, runs self-attention and pooling. Padding
// positions are dropped up front, which is equivalent to masking them.
Var EncodeSequence(Graph& g, std::span<const int> ids, const Parameter& table,
                   const AttentionParams& attention, int heads, bool scale,
                   const PoolParams& pool, int out_dim,
                   const DropoutContext* dropout, bool* empty) {
  std::vector<int> rows;
  for (const int id : ids) {
    if (id != kPaddingId) rows.push_back(id);
  }
  if (empty != nullptr) *empty = rows.empty();
  if (rows.empty()) return g.Input(Matrix(1, out_dim));
  Var x = g.Gather(table, rows);
  x = MaybeDropout(g, x, dropout);
  Var h = MultiHeadSelfAttention(g, x, {}, attention, heads, scale);
  h = MaybeDropout(g, h, dropout);
  return AttentivePool(g, h, {}, pool);
}

}  // namespace

Var MultiHeadSelfAttention(Graph& g, Var inputs, std::span<const bool> mask,
                           const AttentionParams& params, int heads,
                           bool scale) {
  Var q = g.MatMul(inputs, g.Param(params.query));
  Var k = g.MatMul(inputs, g.Param(params.key));
  Var v = g.MatMul(inputs, g.Param(params.value));
  const int head_dim = params.query.value.cols() / heads;
  const Real factor = scale ? 1.0 / std::sqrt(static_cast<Real>(head_dim)) : 1.0;
  return g.MultiHeadAttention(q, k, v, heads, mask, factor);
}

Var AttentivePool(Graph& g, Var inputs, std::span<const bool> mask,
                  const PoolParams& params) {
  Var hidden = g.Tanh(g.AddRowBias(g.MatMul(inputs, g.Param(params.projection)),
                                   g.Param(params.bias)));
  Var scores = g.MatMul(hidden, g.Param(params.query));
  return g.SoftmaxPool(scores, inputs, mask);
}

Var EncodeText(Graph& g, const NewsArticle& article, const ModelParams& params,
               const DropoutContext* dropout, bool* empty) {
  const ModelConfig& c = params.config;
  return EncodeSequence(g, article.word_ids, params.word_embeddings,
                        params.text_attention, c.text_heads, c.scale_attention,
                        params.text_pool, c.text_dim(), dropout, empty);
}

Var EncodeEntities(Graph& g, const NewsArticle& article,
                   const ModelParams& params, const DropoutContext* dropout) {
  const ModelConfig& c = params.config;
  return EncodeSequence(g, article.entity_ids, params.entity_embeddings,
                        params.entity_attention, c.entity_heads,
                        c.scale_attention, params.entity_pool,
                        c.entity_out_dim(), dropout, nullptr);
}

Var EncodeNews(Graph& g, const NewsArticle& article, const ModelParams& params,
               const DropoutContext* dropout) {
  Var text = EncodeText(g, article, params, dropout);
  Var entities = EncodeEntities(g, article, params, dropout);
  return g.Add(g.MatMul(text, g.Param(params.text_fusion)),
               g.MatMul(entities, g.Param(params.entity_fusion)));
}

Vector EncodeNewsVector(const NewsArticle& article, const ModelParams& params) {
  Graph g(/*record_gradients=*/false);
  Var n = EncodeNews(g, article, params, nullptr);
  return g.value(n).RowVector(0);
}

Matrix EncodeCatalog(const Catalog& catalog, const ModelParams& params) {
  Matrix out(catalog.size(), params.config.news_dim);
#pragma omp parallel for schedule(dynamic, 64)
  for (int i = 0; i < catalog.size(); ++i) {
    const Vector v = EncodeNewsVector(catalog[i], params);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace hierec
