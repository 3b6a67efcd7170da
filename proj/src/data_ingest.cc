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

#include "hierec/data_ingest.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace hierec {
namespace {

std::vector<std::string_view> Split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view StripCr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

bool IsTokenChar(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

int Intern(std::string_view key, VocabMode mode,
           std::unordered_map<std::string, int>* ids,
           std::vector<std::string>* names, int unknown) {
  std::string k(key);
  if (auto it = ids->find(k); it != ids->end()) return it->second;
  if (mode == VocabMode::kFrozen) return unknown;
  const int id = static_cast<int>(names->size());
  names->push_back(k);
  ids->emplace(std::move(k), id);
  return id;
}

bool ParseFloat(std::string_view s, Real* out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, *out);
  return ec == std::errc() && ptr == end;
}

// Reads "key f1 .. fdim" lines into the rows of `table` whose key is known.
// Returns the number of distinct vocabulary rows filled.
int LoadVectorFile(const std::filesystem::path& path, int dim,
                   const std::function<int(std::string_view)>& lookup,
                   Matrix* table, std::vector<char>* filled) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file " + path.string());
  std::string line;
  int hits = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> fields = SplitWhitespace(StripCr(line));
    if (fields.empty()) continue;
    const int n_values = static_cast<int>(fields.size()) - 1;
    // The first line fixes the file's dimension; later lines may carry
    // multi-token keys (a few GloVe entries do), which are re-joined.
    if ((line_no == 1 && n_values != dim) || n_values < dim) {
      throw std::runtime_error(
          "dimension mismatch in " + path.string() + " line " +
          std::to_string(line_no) + ": expected " + std::to_string(dim) +
          " values, found " + std::to_string(n_values));
    }
    const size_t key_fields = fields.size() - dim;
    std::string key(fields[0]);
    for (size_t i = 1; i < key_fields; ++i) {
      key += ' ';
      key += fields[i];
    }
    const int id = lookup(key);
    if (id == kPaddingId || (*filled)[id]) continue;
    std::span<Real> row = table->row(id);
    for (int d = 0; d < dim; ++d) {
      if (!ParseFloat(fields[key_fields + d], &row[d])) {
        throw std::runtime_error("bad number in " + path.string() + " line " +
                                 std::to_string(line_no));
      }
    }
    (*filled)[id] = 1;
    ++hits;
  }
  return hits;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsTokenChar(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() {
  words_.push_back("<pad>");
  entities_.push_back("<pad>");
}

std::string Vocabulary::SubtopicKey(std::string_view topic,
                                    std::string_view subtopic) {
  std::string key(topic);
  key += '\t';
  key += subtopic;
  return key;
}

int Vocabulary::Word(std::string_view token, VocabMode mode) {
  return Intern(token, mode, &word_ids_, &words_, kPaddingId);
}

int Vocabulary::Entity(std::string_view key, VocabMode mode) {
  return Intern(key, mode, &entity_ids_, &entities_, kPaddingId);
}

int Vocabulary::Topic(std::string_view name, VocabMode mode) {
  return Intern(name, mode, &topic_ids_, &topics_, kUnknownCategory);
}

int Vocabulary::Subtopic(std::string_view topic, std::string_view subtopic,
                         VocabMode mode) {
  const int parent = Topic(topic, mode);
  if (parent == kUnknownCategory) return kUnknownCategory;
  const std::string key = SubtopicKey(topic, subtopic);
  if (auto it = subtopic_ids_.find(key); it != subtopic_ids_.end()) {
    return it->second;
  }
  if (mode == VocabMode::kFrozen) return kUnknownCategory;
  const int id = static_cast<int>(subtopic_names_.size());
  subtopic_names_.emplace_back(subtopic);
  subtopic_parent_.push_back(parent);
  subtopic_ids_.emplace(key, id);
  return id;
}

int Vocabulary::WordId(std::string_view token) const {
  auto it = word_ids_.find(std::string(token));
  return it == word_ids_.end() ? kPaddingId : it->second;
}

int Vocabulary::EntityId(std::string_view key) const {
  auto it = entity_ids_.find(std::string(key));
  return it == entity_ids_.end() ? kPaddingId : it->second;
}

Vocabulary Vocabulary::FromTables(std::vector<std::string> words,
                                  std::vector<std::string> entities,
                                  std::vector<std::string> topics,
                                  std::vector<std::string> subtopics,
                                  std::vector<int> subtopic_parents) {
  if (subtopics.size() != subtopic_parents.size()) {
    throw std::invalid_argument("vocabulary: subtopic tables disagree");
  }
  Vocabulary v;
  v.words_ = std::move(words);
  v.entities_ = std::move(entities);
  v.topics_ = std::move(topics);
  v.subtopic_names_ = std::move(subtopics);
  v.subtopic_parent_ = std::move(subtopic_parents);
  for (size_t i = 1; i < v.words_.size(); ++i) v.word_ids_.emplace(v.words_[i], i);
  for (size_t i = 1; i < v.entities_.size(); ++i) {
    v.entity_ids_.emplace(v.entities_[i], i);
  }
  for (size_t i = 0; i < v.topics_.size(); ++i) v.topic_ids_.emplace(v.topics_[i], i);
  for (size_t i = 0; i < v.subtopic_names_.size(); ++i) {
    const int parent = v.subtopic_parent_[i];
    if (parent < 0 || parent >= static_cast<int>(v.topics_.size())) {
      throw std::invalid_argument("vocabulary: bad subtopic parent");
    }
    v.subtopic_ids_.emplace(SubtopicKey(v.topics_[parent], v.subtopic_names_[i]), i);
  }
  return v;
}

bool Catalog::Add(NewsArticle article) {
  if (index_.contains(article.news_id)) return false;
  index_.emplace(article.news_id, static_cast<int>(articles_.size()));
  articles_.push_back(std::move(article));
  return true;
}

std::optional<int> Catalog::Find(std::string_view news_id) const {
  auto it = index_.find(std::string(news_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NewsArticle> ParseNewsFields(std::span<const std::string_view> fields,
                                           VocabMode mode, Vocabulary* vocab,
                                           bool* missing_entities) {
  // news_id, category, subcategory, title, abstract, url, title_entities,
  // abstract_entities
  if (fields.size() < 4 || fields[0].empty() || fields[1].empty() ||
      fields[2].empty()) {
    return std::nullopt;
  }
  NewsArticle a;
  a.news_id = std::string(fields[0]);
  a.subtopic_id = vocab->Subtopic(fields[1], fields[2], mode);
  a.topic_id = a.subtopic_id == kUnknownCategory
                   ? vocab->Topic(fields[1], VocabMode::kFrozen)
                   : vocab->SubtopicParent(a.subtopic_id);

  int slot = 0;
  for (const std::string& token : Tokenize(fields[3])) {
    if (slot == kMaxTitleWords) break;
    a.word_ids[slot++] = vocab->Word(token, mode);
  }
  a.word_count = static_cast<int>(
      std::count_if(a.word_ids.begin(), a.word_ids.end(),
                    [](int id) { return id != kPaddingId; }));

  *missing_entities = true;
  if (fields.size() > 6 && !fields[6].empty()) {
    nlohmann::json parsed = nlohmann::json::parse(fields[6], nullptr, false);
    if (parsed.is_array()) {
      *missing_entities = false;
      int e = 0;
      for (const auto& item : parsed) {
        if (e == kMaxTitleEntities) break;
        if (!item.is_object() || !item.contains("WikidataId") ||
            !item["WikidataId"].is_string()) {
          continue;
        }
        a.entity_ids[e++] = vocab->Entity(item["WikidataId"].get<std::string>(), mode);
      }
    }
  }
  a.entity_count = static_cast<int>(
      std::count_if(a.entity_ids.begin(), a.entity_ids.end(),
                    [](int id) { return id != kPaddingId; }));
  return a;
}

NewsParseReport ParseNewsCatalog(const std::filesystem::path& path,
                                 VocabMode mode, Vocabulary* vocab,
                                 Catalog* catalog) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open news file " + path.string());
  NewsParseReport report;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = StripCr(line);
    if (view.empty()) continue;
    ++report.rows;
    const std::vector<std::string_view> fields = Split(view, '\t');
    bool missing_entities = false;
    std::optional<NewsArticle> article =
        ParseNewsFields(fields, mode, vocab, &missing_entities);
    if (!article) {
      if (report.malformed < 5) {
        spdlog::warn("{}: skipping malformed news row {}", path.string(), report.rows);
      }
      ++report.malformed;
      continue;
    }
    if (missing_entities) ++report.missing_entities;
    if (catalog->Add(std::move(*article))) {
      ++report.parsed;
    } else {
      ++report.duplicates;
    }
  }
  if (report.malformed > 0) {
    spdlog::warn("{}: {} malformed news rows skipped", path.string(), report.malformed);
  }
  return report;
}

bool Impression::HasPositive() const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [](const Candidate& c) { return c.label == 1; });
}

bool Impression::HasNegative() const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [](const Candidate& c) { return c.label == 0; });
}

std::optional<Impression> ParseBehaviorsLine(std::string_view line) {
  const std::vector<std::string_view> fields = Split(StripCr(line), '\t');
  if (fields.size() < 5) return std::nullopt;
  Impression imp;
  imp.impression_id = std::string(fields[0]);
  imp.user_id = std::string(fields[1]);
  imp.time = std::string(fields[2]);
  for (std::string_view id : SplitWhitespace(fields[3])) imp.history.emplace_back(id);
  for (std::string_view token : SplitWhitespace(fields[4])) {
    if (token.size() < 3 || token[token.size() - 2] != '-') return std::nullopt;
    const char label = token.back();
    if (label != '0' && label != '1') return std::nullopt;
    imp.candidates.push_back(
        {std::string(token.substr(0, token.size() - 2)), label - '0'});
  }
  if (imp.candidates.empty()) return std::nullopt;
  return imp;
}

std::vector<Impression> ParseBehaviors(const std::filesystem::path& path,
                                       BehaviorsParseReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open behaviors file " + path.string());
  BehaviorsParseReport local;
  std::vector<Impression> out;
  std::string line;
  while (std::getline(in, line)) {
    if (StripCr(line).empty()) continue;
    ++local.rows;
    if (std::optional<Impression> imp = ParseBehaviorsLine(line)) {
      out.push_back(std::move(*imp));
    } else {
      ++local.rejected;
    }
  }
  if (local.rejected > 0) {
    spdlog::warn("{}: {} behavior rows rejected", path.string(), local.rejected);
  }
  if (report != nullptr) *report = local;
  return out;
}

PretrainedTables LoadPretrainedEmbeddings(const Vocabulary& vocab,
                                          const std::filesystem::path& word_path,
                                          const std::filesystem::path& entity_path,
                                          int word_dim, int entity_dim,
                                          uint64_t seed) {
  PretrainedTables t;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> init(-0.1, 0.1);
  auto random_table = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 1; r < rows; ++r) {
      for (Real& x : m.row(r)) x = init(rng);
    }
    return m;
  };
  t.words = random_table(vocab.num_words(), word_dim);
  t.entities = random_table(vocab.num_entities(), entity_dim);

  if (!word_path.empty()) {
    std::vector<char> filled(vocab.num_words(), 0);
    const int hits = LoadVectorFile(
        word_path, word_dim, [&](std::string_view k) { return vocab.WordId(k); },
        &t.words, &filled);
    t.word_coverage = vocab.num_words() > 1
                          ? static_cast<double>(hits) / (vocab.num_words() - 1)
                          : 0.0;
    spdlog::info("word vectors: {}/{} vocabulary rows covered ({:.4f})", hits,
                 vocab.num_words() - 1, t.word_coverage);
  }
  if (!entity_path.empty()) {
    std::vector<char> filled(vocab.num_entities(), 0);
    const int hits = LoadVectorFile(
        entity_path, entity_dim,
        [&](std::string_view k) { return vocab.EntityId(k); }, &t.entities,
        &filled);
    t.entity_coverage = vocab.num_entities() > 1
                            ? static_cast<double>(hits) / (vocab.num_entities() - 1)
                            : 0.0;
    spdlog::info("entity vectors: {}/{} vocabulary rows covered ({:.4f})", hits,
                 vocab.num_entities() - 1, t.entity_coverage);
  }
  return t;
}

const TopicGroup* InterestIndex::FindTopic(int topic_id) const {
  for (const TopicGroup& t : topics) {
    if (t.topic_id == topic_id) return &t;
  }
  return nullptr;
}

const SubtopicGroup* InterestIndex::FindSubtopic(int subtopic_id) const {
  for (const TopicGroup& t : topics) {
    for (const SubtopicGroup& s : t.subtopics) {
      if (s.subtopic_id == subtopic_id) return &s;
    }
  }
  return nullptr;
}

int InterestIndex::num_subtopics() const {
  int n = 0;
  for (const TopicGroup& t : topics) n += static_cast<int>(t.subtopics.size());
  return n;
}

InterestIndex BuildInterestIndexFromNews(std::span<const int> history,
                                         const Catalog& catalog,
                                         int max_history) {
  InterestIndex index;
  std::vector<int> clicks;
  clicks.reserve(history.size());
  for (const int news : history) {
    if (news < 0 || news >= catalog.size() ||
        catalog[news].subtopic_id == kUnknownCategory) {
      ++index.dropped_clicks;
      continue;
    }
    clicks.push_back(news);
  }
  if (static_cast<int>(clicks.size()) > max_history) {
    clicks.erase(clicks.begin(), clicks.end() - max_history);
  }
  index.total_clicks = static_cast<int>(clicks.size());
  if (clicks.empty()) return index;

  // topic -> subtopic -> news, ordered maps give id-ascending tie order.
  std::map<int, std::map<int, std::vector<int>>> groups;
  for (const int news : clicks) {
    groups[catalog[news].topic_id][catalog[news].subtopic_id].push_back(news);
  }
  const double m = index.total_clicks;
  for (auto& [topic_id, subs] : groups) {
    TopicGroup t;
    t.topic_id = topic_id;
    for (auto& [subtopic_id, news] : subs) {
      SubtopicGroup s;
      s.subtopic_id = subtopic_id;
      s.count = static_cast<int>(news.size());
      s.ratio = s.count / m;
      s.news = std::move(news);
      t.count += s.count;
      t.subtopics.push_back(std::move(s));
    }
    t.ratio = t.count / m;
    std::stable_sort(t.subtopics.begin(), t.subtopics.end(),
                     [](const SubtopicGroup& a, const SubtopicGroup& b) {
                       return a.count > b.count;
                     });
    index.topics.push_back(std::move(t));
  }
  std::stable_sort(index.topics.begin(), index.topics.end(),
                   [](const TopicGroup& a, const TopicGroup& b) {
                     return a.count > b.count;
                   });
  return index;
}

InterestIndex BuildInterestIndex(std::span<const std::string> history,
                                 const Catalog& catalog, int max_history) {
  std::vector<int> news;
  news.reserve(history.size());
  int missing = 0;
  for (const std::string& id : history) {
    if (std::optional<int> idx = catalog.Find(id)) {
      news.push_back(*idx);
    } else {
      ++missing;
    }
  }
  if (missing > 0) {
    spdlog::debug("interest index: {} history clicks not in catalog", missing);
  }
  InterestIndex index = BuildInterestIndexFromNews(news, catalog, max_history);
  index.dropped_clicks += missing;
  return index;
}

std::vector<TrainingSample> SampleTrainingInstances(
    const Impression& impression, std::shared_ptr<const InterestIndex> index,
    const Catalog& catalog, int negatives, uint64_t seed,
    SamplingReport* report) {
  if (negatives < 1) throw std::invalid_argument("K must be >= 1");
  SamplingReport local;
  local.impressions = 1;
  std::vector<int> pos;
  std::vector<int> neg;
  for (const Candidate& c : impression.candidates) {
    std::optional<int> idx = catalog.Find(c.news_id);
    if (!idx) continue;
    (c.label == 1 ? pos : neg).push_back(*idx);
  }
  std::vector<TrainingSample> out;
  if (pos.empty()) {
    local.skipped_no_positive = 1;
  } else if (neg.empty()) {
    local.skipped_no_negative = 1;
  } else {
    std::mt19937_64 rng(seed);
    const int available = static_cast<int>(neg.size());
    for (const int p : pos) {
      TrainingSample s;
      s.index = index;
      s.positive = p;
      if (available >= negatives) {
        std::vector<int> pool = neg;
        for (int i = 0; i < negatives; ++i) {
          std::uniform_int_distribution<int> pick(i, available - 1);
          std::swap(pool[i], pool[pick(rng)]);
        }
        s.negatives.assign(pool.begin(), pool.begin() + negatives);
      } else {
        std::uniform_int_distribution<int> pick(0, available - 1);
        for (int i = 0; i < negatives; ++i) s.negatives.push_back(neg[pick(rng)]);
      }
      out.push_back(std::move(s));
    }
    local.samples = static_cast<int>(out.size());
  }
  if (report != nullptr) {
    report->impressions += local.impressions;
    report->samples += local.samples;
    report->skipped_no_positive += local.skipped_no_positive;
    report->skipped_no_negative += local.skipped_no_negative;
  }
  return out;
}

}  // namespace hierec
