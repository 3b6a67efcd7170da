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

#include "hierec/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace hierec {
namespace {

constexpr char kMagic[8] = {'H', 'R', 'E', 'C', 'K', 'P', 'T', '1'};

uint64_t ToLittleEndian(uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xff) << (8 * (7 - i));
    return out;
  }
}

void WriteU64(std::ostream& out, uint64_t v) {
  v = ToLittleEndian(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t ReadU64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return ToLittleEndian(v);
}

Parameter Named(std::string name, Matrix value) {
  return Parameter{std::move(name), std::move(value), true};
}

Matrix Glorot(int rows, int cols, std::mt19937_64& rng) {
  const Real limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Real& x : m.data()) x = dist(rng);
  return m;
}

Matrix Uniform(int rows, int cols, Real half_width, std::mt19937_64& rng,
               bool zero_first_row) {
  std::uniform_real_distribution<Real> dist(-half_width, half_width);
  Matrix m(rows, cols);
  for (int r = zero_first_row ? 1 : 0; r < rows; ++r) {
    for (Real& x : m.row(r)) x = dist(rng);
  }
  return m;
}

AttentionParams InitAttention(const std::string& prefix, int in, int out,
                              std::mt19937_64& rng) {
  return {Named(prefix + ".query", Glorot(in, out, rng)),
          Named(prefix + ".key", Glorot(in, out, rng)),
          Named(prefix + ".value", Glorot(in, out, rng))};
}

PoolParams InitPool(const std::string& prefix, int in, int query,
                    std::mt19937_64& rng) {
  return {Named(prefix + ".projection", Glorot(in, query, rng)),
          Named(prefix + ".bias", Matrix(1, query)),
          Named(prefix + ".query", Glorot(query, 1, rng))};
}

DenseScorer InitScorer(const std::string& prefix, int in, std::mt19937_64& rng) {
  return {Named(prefix + ".weight", Glorot(in, 1, rng))};
}

}  // namespace

void ModelConfig::Validate() const {
  const std::pair<const char*, int> dims[] = {
      {"num_words", num_words},         {"num_entities", num_entities},
      {"num_topics", num_topics},       {"num_subtopics", num_subtopics},
      {"word_dim", word_dim},           {"entity_dim", entity_dim},
      {"text_heads", text_heads},       {"text_head_dim", text_head_dim},
      {"entity_heads", entity_heads},   {"entity_head_dim", entity_head_dim},
      {"text_query_dim", text_query_dim},
      {"entity_query_dim", entity_query_dim},
      {"news_dim", news_dim},           {"count_dim", count_dim},
      {"max_count", max_count}};
  for (const auto& [name, value] : dims) {
    if (value < 1) {
      throw std::invalid_argument(std::string("model config: ") + name +
                                  " must be >= 1");
    }
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"num_words", c.num_words},
                     {"num_entities", c.num_entities},
                     {"num_topics", c.num_topics},
                     {"num_subtopics", c.num_subtopics},
                     {"word_dim", c.word_dim},
                     {"entity_dim", c.entity_dim},
                     {"text_heads", c.text_heads},
                     {"text_head_dim", c.text_head_dim},
                     {"entity_heads", c.entity_heads},
                     {"entity_head_dim", c.entity_head_dim},
                     {"text_query_dim", c.text_query_dim},
                     {"entity_query_dim", c.entity_query_dim},
                     {"news_dim", c.news_dim},
                     {"count_dim", c.count_dim},
                     {"max_count", c.max_count},
                     {"scale_attention", c.scale_attention}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("num_words").get_to(c.num_words);
  j.at("num_entities").get_to(c.num_entities);
  j.at("num_topics").get_to(c.num_topics);
  j.at("num_subtopics").get_to(c.num_subtopics);
  j.at("word_dim").get_to(c.word_dim);
  j.at("entity_dim").get_to(c.entity_dim);
  j.at("text_heads").get_to(c.text_heads);
  j.at("text_head_dim").get_to(c.text_head_dim);
  j.at("entity_heads").get_to(c.entity_heads);
  j.at("entity_head_dim").get_to(c.entity_head_dim);
  j.at("text_query_dim").get_to(c.text_query_dim);
  j.at("entity_query_dim").get_to(c.entity_query_dim);
  j.at("news_dim").get_to(c.news_dim);
  j.at("count_dim").get_to(c.count_dim);
  j.at("max_count").get_to(c.max_count);
  j.at("scale_attention").get_to(c.scale_attention);
}

std::vector<Parameter*> ModelParams::All() {
  return {&word_embeddings,
          &entity_embeddings,
          &text_attention.query,
          &text_attention.key,
          &text_attention.value,
          &entity_attention.query,
          &entity_attention.key,
          &entity_attention.value,
          &text_pool.projection,
          &text_pool.bias,
          &text_pool.query,
          &entity_pool.projection,
          &entity_pool.bias,
          &entity_pool.query,
          &text_fusion,
          &entity_fusion,
          &subtopic_embeddings,
          &topic_embeddings,
          &subtopic_count_embeddings,
          &topic_count_embeddings,
          &subtopic_scorer.weight,
          &topic_scorer.weight,
          &user_scorer.weight};
}

std::vector<const Parameter*> ModelParams::All() const {
  std::vector<Parameter*> mut = const_cast<ModelParams*>(this)->All();
  return {mut.begin(), mut.end()};
}

size_t ModelParams::NumScalars() const {
  size_t n = 0;
  for (const Parameter* p : All()) n += p->value.size();
  return n;
}

ModelParams InitModel(const ModelConfig& c, uint64_t seed) {
  c.Validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config = c;
  p.word_embeddings =
      Named("word_embeddings", Uniform(c.num_words, c.word_dim, 0.1, rng, true));
  p.entity_embeddings = Named(
      "entity_embeddings", Uniform(c.num_entities, c.entity_dim, 0.1, rng, true));
  p.text_attention = InitAttention("text_attention", c.word_dim, c.text_dim(), rng);
  p.entity_attention =
      InitAttention("entity_attention", c.entity_dim, c.entity_out_dim(), rng);
  p.text_pool = InitPool("text_pool", c.text_dim(), c.text_query_dim, rng);
  p.entity_pool =
      InitPool("entity_pool", c.entity_out_dim(), c.entity_query_dim, rng);
  p.text_fusion = Named("text_fusion", Glorot(c.text_dim(), c.news_dim, rng));
  p.entity_fusion =
      Named("entity_fusion", Glorot(c.entity_out_dim(), c.news_dim, rng));
  p.subtopic_embeddings = Named(
      "subtopic_embeddings", Uniform(c.num_subtopics, c.news_dim, 0.05, rng, false));
  p.topic_embeddings = Named("topic_embeddings",
                             Uniform(c.num_topics, c.news_dim, 0.05, rng, false));
  p.subtopic_count_embeddings =
      Named("subtopic_count_embeddings",
            Uniform(c.max_count + 1, c.count_dim, 0.05, rng, false));
  p.topic_count_embeddings =
      Named("topic_count_embeddings",
            Uniform(c.max_count + 1, c.count_dim, 0.05, rng, false));
  p.subtopic_scorer = InitScorer("subtopic_scorer", c.news_dim, rng);
  p.topic_scorer = InitScorer("topic_scorer", c.news_dim + c.count_dim, rng);
  p.user_scorer = InitScorer("user_scorer", c.news_dim + c.count_dim, rng);
  return p;
}

void RandomizeParams(ModelParams* params, Real scale, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Parameter* p : params->All()) {
    const bool padded = p == &params->word_embeddings ||
                        p == &params->entity_embeddings;
    p->value = Uniform(p->value.rows(), p->value.cols(), scale, rng, padded);
  }
}

void SetEmbeddings(const Matrix& words, const Matrix& entities,
                   ModelParams* params) {
  if (!words.SameShape(params->word_embeddings.value) ||
      !entities.SameShape(params->entity_embeddings.value)) {
    throw std::invalid_argument("SetEmbeddings: table shape mismatch");
  }
  params->word_embeddings.value = words;
  params->entity_embeddings.value = entities;
}

nlohmann::json CheckpointManifest(const ModelParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const Parameter* p : params.All()) {
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"offset", offset}});
    offset += p->value.size() * sizeof(Real);
  }
  return tensors;
}

void SaveCheckpoint(const ModelParams& params, const std::filesystem::path& path,
                    const nlohmann::json& metadata) {
  nlohmann::json header;
  header["config"] = params.config;
  header["tensors"] = CheckpointManifest(params);
  if (!metadata.is_null()) header["metadata"] = metadata;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  WriteU64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params.All()) {
    for (const Real x : p->value.data()) {
      uint64_t bits = 0;
      std::memcpy(&bits, &x, sizeof(bits));
      WriteU64(out, bits);
    }
  }
  if (!out) throw std::runtime_error("short write on checkpoint " + path.string());
}

ModelParams LoadCheckpoint(const std::filesystem::path& path,
                           nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const uint64_t header_len = ReadU64(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  const nlohmann::json header = nlohmann::json::parse(text);

  ModelParams params = InitModel(header.at("config").get<ModelConfig>(), 0);
  const nlohmann::json& tensors = header.at("tensors");
  std::vector<Parameter*> all = params.All();
  if (tensors.size() != all.size()) {
    throw std::runtime_error("checkpoint tensor count mismatch");
  }
  for (size_t i = 0; i < all.size(); ++i) {
    const nlohmann::json& t = tensors[i];
    Parameter* p = all[i];
    if (t.at("name").get<std::string>() != p->name ||
        t.at("rows").get<int>() != p->value.rows() ||
        t.at("cols").get<int>() != p->value.cols()) {
      throw std::runtime_error("checkpoint manifest mismatch at " + p->name);
    }
    for (Real& x : p->value.data()) {
      const uint64_t bits = ReadU64(in);
      std::memcpy(&x, &bits, sizeof(x));
    }
  }
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  if (metadata != nullptr) {
    *metadata = header.contains("metadata") ? header["metadata"] : nlohmann::json();
  }
  return params;
}

}  // namespace hierec
