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

// Title encoder: word and entity self-attention, attentive pooling, and the
// linear fusion n = W_t n_t + W_e n_e.

#ifndef HIEREC_NEWS_ENCODER_H_
#define HIEREC_NEWS_ENCODER_H_

#include <random>
#include <span>

#include "hierec/autodiff.h"
#include "hierec/data_ingest.h"
#include "hierec/model.h"

namespace hierec {

// Dropout is active iff a context is passed.
struct DropoutContext {
  Real rate = 0.2;
  std::mt19937_64* rng = nullptr;
};

Var MultiHeadSelfAttention(Graph& g, Var inputs, std::span<const bool> mask,
                           const AttentionParams& params, int heads,
                           bool scale);

// Pooling weights are available as g.aux(result).
Var AttentivePool(Graph& g, Var inputs, std::span<const bool> mask,
                  const PoolParams& params);

// Zero vector when the title has no words (`empty` set to true).
Var EncodeText(Graph& g, const NewsArticle& article, const ModelParams& params,
               const DropoutContext* dropout, bool* empty = nullptr);
// Zero vector when the title has no entities.
Var EncodeEntities(Graph& g, const NewsArticle& article,
                   const ModelParams& params, const DropoutContext* dropout);
Var EncodeNews(Graph& g, const NewsArticle& article, const ModelParams& params,
               const DropoutContext* dropout);

// Inference helpers (dropout off).
Vector EncodeNewsVector(const NewsArticle& article, const ModelParams& params);
// One row per catalog entry, in catalog order. Parallel over news.
Matrix EncodeCatalog(const Catalog& catalog, const ModelParams& params);

}  // namespace hierec

#endif  // HIEREC_NEWS_ENCODER_H_
