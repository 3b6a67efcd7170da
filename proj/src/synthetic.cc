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

#include "hierec/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_set>

#include <fmt/format.h>

#include "hierec/random.h"

namespace hierec {
namespace {

// Symmetric Dirichlet(alpha) over n categories. Gamma variates are drawn as
// log G = log Gamma(alpha + 1) + log(U) / alpha, which stays finite for the
// tiny alphas a large kappa implies.
std::vector<double> SampleDirichlet(int n, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> log_g(n);
  for (int i = 0; i < n; ++i) {
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    log_g[i] = std::log(gamma(rng)) + std::log(u) / alpha;
  }
  const double top = *std::max_element(log_g.begin(), log_g.end());
  std::vector<double> p(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += p[i] = std::exp(log_g[i] - top);
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> SampleProfile(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const int n = spec.num_subtopics();
  if (std::isinf(spec.kappa)) {
    std::vector<double> p(n, 0.0);
    p[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1.0;
    return p;
  }
  return SampleDirichlet(n, 1.0 / spec.kappa, rng);
}

std::string WordToken(int id) { return fmt::format("w{}", id); }

}  // namespace

void SyntheticSpec::Validate() const {
  const int counts[] = {n_topics, subtopics_per_topic, news_per_subtopic,
                        vocab_size, n_users, clicks_per_user,
                        candidates_per_impression, signature_words, topic_words,
                        min_title_words};
  for (const int c : counts) {
    if (c < 1) throw std::invalid_argument("synthetic: counts must be >= 1");
  }
  if (train_impressions_per_user < 0 || dev_impressions_per_user < 0 ||
      entities_per_subtopic < 0 || min_title_entities < 0 ||
      max_title_entities < min_title_entities ||
      max_title_words < min_title_words ||
      max_title_words > kMaxTitleWords) {
    throw std::invalid_argument("synthetic: bad impression or title sizes");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("synthetic: kappa must be > 0");
  const double fractions[] = {subtopic_word_prob, topic_word_prob,
                              profile_candidate_fraction,
                              same_topic_candidate_fraction};
  for (const double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw std::invalid_argument("synthetic: fractions must be in [0, 1]");
    }
  }
  if (subtopic_word_prob + topic_word_prob > 1.0 ||
      profile_candidate_fraction + same_topic_candidate_fraction > 1.0) {
    throw std::invalid_argument("synthetic: fractions sum above 1");
  }
  if (vocab_size < num_subtopics() * signature_words + n_topics * topic_words + 1) {
    throw std::invalid_argument("synthetic: vocab too small for signature words");
  }
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"n_topics", s.n_topics},
       {"subtopics_per_topic", s.subtopics_per_topic},
       {"news_per_subtopic", s.news_per_subtopic},
       {"vocab_size", s.vocab_size},
       {"n_users", s.n_users},
       {"kappa", std::isinf(s.kappa) ? nlohmann::json("inf") : nlohmann::json(s.kappa)},
       {"clicks_per_user", s.clicks_per_user},
       {"candidates_per_impression", s.candidates_per_impression},
       {"train_impressions_per_user", s.train_impressions_per_user},
       {"dev_impressions_per_user", s.dev_impressions_per_user},
       {"signature_words", s.signature_words},
       {"topic_words", s.topic_words},
       {"entities_per_subtopic", s.entities_per_subtopic},
       {"min_title_entities", s.min_title_entities},
       {"max_title_entities", s.max_title_entities},
       {"min_title_words", s.min_title_words},
       {"max_title_words", s.max_title_words},
       {"subtopic_word_prob", s.subtopic_word_prob},
       {"topic_word_prob", s.topic_word_prob},
       {"profile_candidate_fraction", s.profile_candidate_fraction},
       {"same_topic_candidate_fraction", s.same_topic_candidate_fraction},
       {"seed", s.seed}};
}

SyntheticCorpus GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  SyntheticCorpus corpus;
  corpus.spec = spec;
  const int n_sub = spec.num_subtopics();
  for (int t = 0; t < spec.n_topics; ++t) {
    corpus.topic_names.push_back(fmt::format("topic{}", t));
    for (int s = 0; s < spec.subtopics_per_topic; ++s) {
      corpus.subtopic_names.push_back(fmt::format("topic{}sub{}", t, s));
    }
  }

  // Vocabulary layout: disjoint signature blocks per subtopic, then per
  // topic, then background.
  const int topic_base = n_sub * spec.signature_words;
  const int background_base = topic_base + spec.n_topics * spec.topic_words;
  // Zipf-like weights inside each signature block.
  std::vector<double> zipf(spec.signature_words);
  for (int r = 0; r < spec.signature_words; ++r) zipf[r] = 1.0 / (r + 1.0);

  std::mt19937_64 news_rng(DeriveSeed(spec.seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> title_len(spec.min_title_words,
                                               spec.max_title_words);
  std::uniform_int_distribution<int> background(background_base,
                                                spec.vocab_size - 1);
  std::uniform_int_distribution<int> topic_word(0, spec.topic_words - 1);
  std::discrete_distribution<int> signature(zipf.begin(), zipf.end());

  std::vector<std::vector<int>> news_of_subtopic(n_sub);
  for (int sub = 0; sub < n_sub; ++sub) {
    const int topic = sub / spec.subtopics_per_topic;
    for (int k = 0; k < spec.news_per_subtopic; ++k) {
      SyntheticNews news;
      news.news_id = fmt::format("N{}", corpus.news.size() + 1);
      news.topic = topic;
      news.subtopic = sub;
      const int len = title_len(news_rng);
      for (int w = 0; w < len; ++w) {
        const double r = unit(news_rng);
        int id;
        if (r < spec.subtopic_word_prob) {
          id = sub * spec.signature_words + signature(news_rng);
        } else if (r < spec.subtopic_word_prob + spec.topic_word_prob) {
          id = topic_base + topic * spec.topic_words + topic_word(news_rng);
        } else {
          id = background(news_rng);
        }
        if (!news.title.empty()) news.title += ' ';
        news.title += WordToken(id);
      }
      if (spec.entities_per_subtopic > 0) {
        std::uniform_int_distribution<int> entity(0, spec.entities_per_subtopic - 1);
        const int n_entities = std::uniform_int_distribution<int>(
            spec.min_title_entities, spec.max_title_entities)(news_rng);
        for (int e = 0; e < n_entities; ++e) {
          news.entities.push_back(fmt::format("Q{}x{}", sub, entity(news_rng)));
        }
      }
      news_of_subtopic[sub].push_back(static_cast<int>(corpus.news.size()));
      corpus.news.push_back(std::move(news));
    }
  }

  const int n_news = static_cast<int>(corpus.news.size());
  int impression_id = 0;
  auto make_impressions = [&](int user, const std::vector<double>& profile,
                              const std::vector<std::string>& history,
                              int count, std::mt19937_64& rng,
                              std::vector<Impression>* out) {
    std::discrete_distribution<int> by_profile(profile.begin(), profile.end());
    std::uniform_int_distribution<int> any_news(0, n_news - 1);
    std::uniform_int_distribution<int> sub_in_topic(0, spec.subtopics_per_topic - 1);
    const int n_cand = spec.candidates_per_impression;
    const int n_profile = std::max(
        1, static_cast<int>(std::lround(n_cand * spec.profile_candidate_fraction)));
    const int n_same = static_cast<int>(
        std::lround(n_cand * spec.same_topic_candidate_fraction));
    for (int i = 0; i < count; ++i) {
      std::vector<int> cands;
      std::unordered_set<int> seen;
      int attempts = 0;
      while (static_cast<int>(cands.size()) < n_cand && attempts < 100 * n_cand) {
        ++attempts;
        const int slot = static_cast<int>(cands.size());
        int pick;
        if (slot < n_profile) {
          const auto& pool = news_of_subtopic[by_profile(rng)];
          pick = pool[std::uniform_int_distribution<int>(
              0, static_cast<int>(pool.size()) - 1)(rng)];
        } else if (slot < n_profile + n_same) {
          const int topic = by_profile(rng) / spec.subtopics_per_topic;
          const auto& pool =
              news_of_subtopic[topic * spec.subtopics_per_topic + sub_in_topic(rng)];
          pick = pool[std::uniform_int_distribution<int>(
              0, static_cast<int>(pool.size()) - 1)(rng)];
        } else {
          pick = any_news(rng);
        }
        if (seen.insert(pick).second) cands.push_back(pick);
      }
      std::shuffle(cands.begin(), cands.end(), rng);
      std::vector<double> weight(cands.size());
      for (size_t c = 0; c < cands.size(); ++c) {
        weight[c] = profile[corpus.news[cands[c]].subtopic];
      }
      const int clicked = std::discrete_distribution<int>(weight.begin(),
                                                          weight.end())(rng);
      Impression imp;
      imp.impression_id = std::to_string(++impression_id);
      imp.user_id = corpus.user_ids[user];
      imp.time = "11/15/2019 8:00:00 AM";
      imp.history = history;
      for (size_t c = 0; c < cands.size(); ++c) {
        imp.candidates.push_back(
            {corpus.news[cands[c]].news_id, static_cast<int>(c) == clicked ? 1 : 0});
      }
      out->push_back(std::move(imp));
    }
  };

  std::vector<std::vector<std::string>> histories(spec.n_users);
  for (int u = 0; u < spec.n_users; ++u) {
    std::mt19937_64 rng(DeriveSeed(spec.seed, 2, u));
    corpus.user_ids.push_back(fmt::format("U{}", u + 1));
    corpus.profiles.push_back(SampleProfile(spec, rng));
    const std::vector<double>& profile = corpus.profiles.back();
    std::discrete_distribution<int> by_profile(profile.begin(), profile.end());
    for (int c = 0; c < spec.clicks_per_user; ++c) {
      const auto& pool = news_of_subtopic[by_profile(rng)];
      const int pick = pool[std::uniform_int_distribution<int>(
          0, static_cast<int>(pool.size()) - 1)(rng)];
      histories[u].push_back(corpus.news[pick].news_id);
    }
  }
  for (int u = 0; u < spec.n_users; ++u) {
    std::mt19937_64 rng(DeriveSeed(spec.seed, 3, u));
    make_impressions(u, corpus.profiles[u], histories[u],
                     spec.train_impressions_per_user, rng, &corpus.train);
  }
  for (int u = 0; u < spec.n_users; ++u) {
    std::mt19937_64 rng(DeriveSeed(spec.seed, 4, u));
    make_impressions(u, corpus.profiles[u], histories[u],
                     spec.dev_impressions_per_user, rng, &corpus.dev);
  }
  return corpus;
}

std::string ToNewsTsvLine(const SyntheticNews& news, const SyntheticCorpus& corpus) {
  nlohmann::json entities = nlohmann::json::array();
  for (const std::string& e : news.entities) {
    entities.push_back({{"Label", e},
                        {"Type", "O"},
                        {"WikidataId", e},
                        {"Confidence", 1.0},
                        {"OccurrenceOffsets", nlohmann::json::array()},
                        {"SurfaceForms", nlohmann::json::array()}});
  }
  return fmt::format("{}\t{}\t{}\t{}\t\t{}\t{}\t[]", news.news_id,
                     corpus.topic_names[news.topic],
                     corpus.subtopic_names[news.subtopic], news.title,
                     "https://example.invalid/" + news.news_id, entities.dump());
}

std::string ToBehaviorsTsvLine(const Impression& imp) {
  std::string history;
  for (const std::string& h : imp.history) {
    if (!history.empty()) history += ' ';
    history += h;
  }
  std::string candidates;
  for (const Candidate& c : imp.candidates) {
    if (!candidates.empty()) candidates += ' ';
    candidates += fmt::format("{}-{}", c.news_id, c.label);
  }
  return fmt::format("{}\t{}\t{}\t{}\t{}", imp.impression_id, imp.user_id,
                     imp.time, history, candidates);
}

void WriteMindFormat(const SyntheticCorpus& corpus,
                     const std::filesystem::path& dir) {
  auto write_split = [&](const std::string& name,
                         const std::vector<Impression>& impressions) {
    const std::filesystem::path split = dir / name;
    std::filesystem::create_directories(split);
    std::ofstream news(split / "news.tsv");
    for (const SyntheticNews& n : corpus.news) {
      news << ToNewsTsvLine(n, corpus) << '\n';
    }
    std::ofstream behaviors(split / "behaviors.tsv");
    for (const Impression& imp : impressions) {
      behaviors << ToBehaviorsTsvLine(imp) << '\n';
    }
    if (!news || !behaviors) {
      throw std::runtime_error("cannot write synthetic corpus under " + split.string());
    }
  };
  write_split("train", corpus.train);
  write_split("dev", corpus.dev);
}

void BuildCatalog(const SyntheticCorpus& corpus, Vocabulary* vocab,
                  Catalog* catalog) {
  for (const SyntheticNews& n : corpus.news) {
    const std::string line = ToNewsTsvLine(n, corpus);
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.emplace_back(line.data() + start,
                          (tab == std::string::npos ? line.size() : tab) - start);
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    bool missing = false;
    std::optional<NewsArticle> article =
        ParseNewsFields(fields, VocabMode::kBuild, vocab, &missing);
    if (article) catalog->Add(std::move(*article));
  }
}

}  // namespace hierec
