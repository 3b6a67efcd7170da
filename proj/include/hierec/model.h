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

// Model dimensions and the full set of learnable tensors.

#ifndef HIEREC_MODEL_H_
#define HIEREC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierec/autodiff.h"

namespace hierec {

struct ModelConfig {
  // Table sizes, including the padding rows of words/entities.
  int num_words = 1;
  int num_entities = 1;
  int num_topics = 1;
  int num_subtopics = 1;

  int word_dim = 300;
  int entity_dim = 100;
  int text_heads = 20;
  int text_head_dim = 20;     // text self-attention output = 400
  int entity_heads = 5;
  int entity_head_dim = 20;   // entity self-attention output = 100
  int text_query_dim = 200;
  int entity_query_dim = 200;
  int news_dim = 400;         // also topic/subtopic embedding size
  int count_dim = 100;
  int max_count = 50;         // count embeddings are indexed by min(count, 50)
  bool scale_attention = true;

  int text_dim() const { return text_heads * text_head_dim; }
  int entity_out_dim() const { return entity_heads * entity_head_dim; }

  // Throws std::invalid_argument on a non-positive dimension.
  void Validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct AttentionParams {
  Parameter query;  // in x (heads * head_dim)
  Parameter key;
  Parameter value;
};

// score_i = query . tanh(x_i P + b)
struct PoolParams {
  Parameter projection;  // d x q
  Parameter bias;        // 1 x q
  Parameter query;       // q x 1
};

// Single dense layer producing one attention logit. It has no bias: the
// logits feed a softmax, which is invariant to a shared offset.
struct DenseScorer {
  Parameter weight;  // in x 1
};

struct ModelParams {
  ModelConfig config;

  Parameter word_embeddings;    // num_words x word_dim
  Parameter entity_embeddings;  // num_entities x entity_dim
  AttentionParams text_attention;
  AttentionParams entity_attention;
  PoolParams text_pool;
  PoolParams entity_pool;
  Parameter text_fusion;    // text_dim x news_dim   (W_t, row-vector form)
  Parameter entity_fusion;  // entity_out x news_dim (W_e)

  Parameter subtopic_embeddings;        // num_subtopics x news_dim
  Parameter topic_embeddings;           // num_topics x news_dim
  Parameter subtopic_count_embeddings;  // (max_count + 1) x count_dim
  Parameter topic_count_embeddings;     // (max_count + 1) x count_dim
  DenseScorer subtopic_scorer;          // news_dim -> 1
  DenseScorer topic_scorer;             // news_dim + count_dim -> 1
  DenseScorer user_scorer;              // news_dim + count_dim -> 1

  // Stable order; names are unique.
  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  size_t NumScalars() const;
};

// Glorot-uniform matrices, zero biases, U(-0.05, 0.05) category and count
// embeddings, U(-0.1, 0.1) word/entity rows (row 0 zero).
ModelParams InitModel(const ModelConfig& config, uint64_t seed);

// Redraws every tensor from U(-scale, scale), keeping the padding rows of the
// word and entity tables at zero. Used to move gradient checks away from the
// near-uniform attention of a fresh initialization.
void RandomizeParams(ModelParams* params, Real scale, uint64_t seed);

// Copies pretrained tables into the embedding parameters (shapes must match).
void SetEmbeddings(const Matrix& words, const Matrix& entities, ModelParams* params);

// Checkpoint container: "HRECKPT1", u64 header length, JSON header
// {"config": ..., "tensors": [{"name", "rows", "cols", "offset"}]}, then each
// tensor's doubles in little-endian byte order. Round-trips bit-exactly.
void SaveCheckpoint(const ModelParams& params, const std::filesystem::path& path,
                    const nlohmann::json& metadata = {});
ModelParams LoadCheckpoint(const std::filesystem::path& path,
                           nlohmann::json* metadata = nullptr);
nlohmann::json CheckpointManifest(const ModelParams& params);

}  // namespace hierec

#endif  // HIEREC_MODEL_H_
