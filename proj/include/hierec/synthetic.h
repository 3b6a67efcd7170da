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

// Synthetic MIND-format corpora with known user interest profiles.
//
// Every subtopic owns a small set of signature words and entities; titles mix
// them with topic-wide words and background noise. A user's profile is a
// symmetric Dirichlet draw over all subtopics with alpha = 1 / kappa, so a
// large kappa concentrates interest on few subtopics. Clicks follow the
// profile; each impression shows a mix of profile-driven, same-topic and
// uniform candidates and the click is drawn in proportion to the profile
// mass of each candidate's subtopic.

#ifndef HIEREC_SYNTHETIC_H_
#define HIEREC_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierec/data_ingest.h"

namespace hierec {

struct SyntheticSpec {
  int n_topics = 6;
  int subtopics_per_topic = 5;
  int news_per_subtopic = 40;
  int vocab_size = 2000;
  int n_users = 200;
  // +infinity puts each user on exactly one subtopic.
  double kappa = 10.0;
  int clicks_per_user = 30;
  int candidates_per_impression = 10;
  int train_impressions_per_user = 2;
  int dev_impressions_per_user = 1;

  // Title composition.
  int signature_words = 8;   // per subtopic
  int topic_words = 6;       // per topic
  int entities_per_subtopic = 4;
  int min_title_entities = 0;
  int max_title_entities = 2;
  int min_title_words = 6;
  int max_title_words = 14;
  double subtopic_word_prob = 0.5;
  double topic_word_prob = 0.2;  // the rest is uniform background
  // Candidate mix: the rest after these two fractions is uniform news.
  double profile_candidate_fraction = 0.3;
  double same_topic_candidate_fraction = 0.4;
  uint64_t seed = 1;

  // Throws std::invalid_argument on a non-positive count or bad fraction.
  void Validate() const;
  int num_subtopics() const { return n_topics * subtopics_per_topic; }
  int num_news() const { return num_subtopics() * news_per_subtopic; }
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);

struct SyntheticNews {
  std::string news_id;
  int topic = 0;
  int subtopic = 0;  // global subtopic index
  std::string title;
  std::vector<std::string> entities;  // WikidataId-style keys
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  std::vector<std::string> topic_names;
  std::vector<std::string> subtopic_names;  // global index
  std::vector<SyntheticNews> news;
  std::vector<Impression> train;
  std::vector<Impression> dev;
  std::vector<std::vector<double>> profiles;  // user x subtopic
  std::vector<std::string> user_ids;
};

SyntheticCorpus GenerateSynthetic(const SyntheticSpec& spec);

// news.tsv line in the MIND column layout.
std::string ToNewsTsvLine(const SyntheticNews& news, const SyntheticCorpus& corpus);
std::string ToBehaviorsTsvLine(const Impression& impression);

// Writes <dir>/train/{news,behaviors}.tsv and <dir>/dev/{news,behaviors}.tsv.
// Both news files hold the full catalog.
void WriteMindFormat(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

// Parses the corpus news through the regular TSV path.
void BuildCatalog(const SyntheticCorpus& corpus, Vocabulary* vocab,
                  Catalog* catalog);

}  // namespace hierec

#endif  // HIEREC_SYNTHETIC_H_
