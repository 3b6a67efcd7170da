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

// MIND-format ingestion: news catalog, behavior logs, pretrained vectors,
// and the per-user topic -> subtopic -> clicks index.

#ifndef HIEREC_DATA_INGEST_H_
#define HIEREC_DATA_INGEST_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hierec/tensor.h"

namespace hierec {

inline constexpr int kMaxTitleWords = 30;
inline constexpr int kMaxTitleEntities = 5;
inline constexpr int kMaxHistory = 50;
inline constexpr int kPaddingId = 0;
// Topic/subtopic id of a news whose category was not in a frozen vocabulary.
inline constexpr int kUnknownCategory = -1;

enum class VocabMode { kBuild, kFrozen };

// Lowercases ASCII and splits on runs of non-alphanumeric bytes. Bytes >= 0x80
// are kept as token characters so UTF-8 words stay whole.
std::vector<std::string> Tokenize(std::string_view text);

// Dense id assignment in first-seen order. Words and entities reserve id 0
// for padding; topics and subtopics start at 0. A subtopic is keyed by its
// (topic, subtopic) name pair, so it always has exactly one parent.
class Vocabulary {
 public:
  Vocabulary();

  int num_words() const { return static_cast<int>(words_.size()); }
  int num_entities() const { return static_cast<int>(entities_.size()); }
  int num_topics() const { return static_cast<int>(topics_.size()); }
  int num_subtopics() const { return static_cast<int>(subtopic_names_.size()); }

  // Returns the id, inserting in kBuild mode; unseen in kFrozen -> padding.
  int Word(std::string_view token, VocabMode mode);
  int Entity(std::string_view key, VocabMode mode);
  // Unseen in kFrozen -> kUnknownCategory.
  int Topic(std::string_view name, VocabMode mode);
  int Subtopic(std::string_view topic, std::string_view subtopic,
               VocabMode mode);

  int WordId(std::string_view token) const;    // padding if unknown
  int EntityId(std::string_view key) const;    // padding if unknown
  int SubtopicParent(int subtopic_id) const { return subtopic_parent_[subtopic_id]; }

  const std::string& word(int id) const { return words_[id]; }
  const std::string& entity(int id) const { return entities_[id]; }
  const std::string& topic(int id) const { return topics_[id]; }
  const std::string& subtopic(int id) const { return subtopic_names_[id]; }

  // Serialization helpers: the id -> name tables fully determine the maps.
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& entities() const { return entities_; }
  const std::vector<std::string>& topics() const { return topics_; }
  const std::vector<std::string>& subtopics() const { return subtopic_names_; }
  const std::vector<int>& subtopic_parents() const { return subtopic_parent_; }
  static Vocabulary FromTables(std::vector<std::string> words,
                               std::vector<std::string> entities,
                               std::vector<std::string> topics,
                               std::vector<std::string> subtopics,
                               std::vector<int> subtopic_parents);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.entities_ == b.entities_ &&
           a.topics_ == b.topics_ && a.subtopic_names_ == b.subtopic_names_ &&
           a.subtopic_parent_ == b.subtopic_parent_;
  }

 private:
  static std::string SubtopicKey(std::string_view topic,
                                 std::string_view subtopic);

  std::vector<std::string> words_;
  std::vector<std::string> entities_;
  std::vector<std::string> topics_;
  std::vector<std::string> subtopic_names_;
  std::vector<int> subtopic_parent_;
  std::unordered_map<std::string, int> word_ids_;
  std::unordered_map<std::string, int> entity_ids_;
  std::unordered_map<std::string, int> topic_ids_;
  std::unordered_map<std::string, int> subtopic_ids_;
};

struct NewsArticle {
  std::string news_id;
  int topic_id = kUnknownCategory;
  int subtopic_id = kUnknownCategory;
  std::array<int, kMaxTitleWords> word_ids{};
  std::array<int, kMaxTitleEntities> entity_ids{};
  int word_count = 0;
  int entity_count = 0;
};

// News articles in insertion order plus an id lookup. Everything downstream
// refers to news by catalog index.
class Catalog {
 public:
  // Returns false (and ignores the article) if the id is already present.
  bool Add(NewsArticle article);
  std::optional<int> Find(std::string_view news_id) const;
  const NewsArticle& operator[](int index) const { return articles_[index]; }
  int size() const { return static_cast<int>(articles_.size()); }
  const std::vector<NewsArticle>& articles() const { return articles_; }

 private:
  std::vector<NewsArticle> articles_;
  std::unordered_map<std::string, int> index_;
};

struct NewsParseReport {
  int rows = 0;
  int parsed = 0;
  int malformed = 0;
  int duplicates = 0;
  int missing_entities = 0;
};

// Parses one MIND news.tsv into `catalog`, growing `vocab` in kBuild mode.
// Throws std::runtime_error if the file cannot be opened.
NewsParseReport ParseNewsCatalog(const std::filesystem::path& path,
                                 VocabMode mode, Vocabulary* vocab,
                                 Catalog* catalog);

// Builds an article from already-split TSV fields (exposed for tests).
std::optional<NewsArticle> ParseNewsFields(std::span<const std::string_view> fields,
                                           VocabMode mode, Vocabulary* vocab,
                                           bool* missing_entities);

struct Candidate {
  std::string news_id;
  int label = 0;
};

struct Impression {
  std::string impression_id;
  std::string user_id;
  std::string time;
  std::vector<std::string> history;  // oldest first
  std::vector<Candidate> candidates;

  bool HasPositive() const;
  bool HasNegative() const;
};

struct BehaviorsParseReport {
  int rows = 0;
  int rejected = 0;
};

// Parses one MIND behaviors.tsv line; nullopt if the row is rejected.
std::optional<Impression> ParseBehaviorsLine(std::string_view line);
std::vector<Impression> ParseBehaviors(const std::filesystem::path& path,
                                       BehaviorsParseReport* report = nullptr);

struct PretrainedTables {
  Matrix words;     // num_words x word_dim, row 0 zero
  Matrix entities;  // num_entities x entity_dim, row 0 zero
  double word_coverage = 0.0;
  double entity_coverage = 0.0;
};

// Rows found in the vector files are copied verbatim, the rest are drawn from
// U(-0.1, 0.1). Empty paths mean "no file" (coverage 0). Throws
// std::runtime_error on a dimension mismatch or unreadable file.
PretrainedTables LoadPretrainedEmbeddings(const Vocabulary& vocab,
                                          const std::filesystem::path& word_path,
                                          const std::filesystem::path& entity_path,
                                          int word_dim, int entity_dim,
                                          uint64_t seed);

struct SubtopicGroup {
  int subtopic_id = 0;
  int count = 0;       // l
  double ratio = 0.0;  // l / M
  std::vector<int> news;  // catalog indices, history order
};

struct TopicGroup {
  int topic_id = 0;
  int count = 0;
  double ratio = 0.0;  // count / M
  std::vector<SubtopicGroup> subtopics;
};

// A user's recent clicks grouped topic -> subtopic. Topics and subtopics are
// ordered by descending count, ties by ascending id.
struct InterestIndex {
  int total_clicks = 0;  // M
  int dropped_clicks = 0;
  std::vector<TopicGroup> topics;

  const TopicGroup* FindTopic(int topic_id) const;
  const SubtopicGroup* FindSubtopic(int subtopic_id) const;
  int num_subtopics() const;
  bool empty() const { return topics.empty(); }
};

// Keeps the `max_history` most recent resolvable clicks (ids missing from the
// catalog, or with unknown categories, are dropped and counted).
InterestIndex BuildInterestIndex(std::span<const std::string> history,
                                 const Catalog& catalog,
                                 int max_history = kMaxHistory);
InterestIndex BuildInterestIndexFromNews(std::span<const int> history,
                                         const Catalog& catalog,
                                         int max_history = kMaxHistory);

struct TrainingSample {
  std::shared_ptr<const InterestIndex> index;
  int positive = 0;            // catalog index
  std::vector<int> negatives;  // catalog indices, size K
};

struct SamplingReport {
  int impressions = 0;
  int samples = 0;
  int skipped_no_positive = 0;
  int skipped_no_negative = 0;
};

// One sample per positive candidate. Negatives are drawn uniformly from the
// impression's non-clicked candidates, without replacement when at least K
// exist and with replacement otherwise. Deterministic in `seed`.
std::vector<TrainingSample> SampleTrainingInstances(
    const Impression& impression, std::shared_ptr<const InterestIndex> index,
    const Catalog& catalog, int negatives, uint64_t seed,
    SamplingReport* report = nullptr);

}  // namespace hierec

#endif  // HIEREC_DATA_INGEST_H_
