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

#include "hierec/experiment.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hierec/metrics.h"
#include "hierec/news_encoder.h"
#include "hierec/random.h"

namespace hierec {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing.

std::string Joined(const std::vector<std::string>& inputs) {
  std::string out;
  for (const std::string& s : inputs) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::vector<std::string> SplitList(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const std::string& s : inputs) {
    std::string token;
    for (const char c : s) {
      if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
        if (!token.empty()) out.push_back(token);
        token.clear();
      } else {
        token += c;
      }
    }
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

int64_t ParseInt(const std::string& key, const std::string& v) {
  int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, v));
  }
  return out;
}

double ParseDouble(const std::string& key, const std::string& v,
                   bool allow_inf = false) {
  if (allow_inf && (v == "inf" || v == "infinity")) {
    return std::numeric_limits<double>::infinity();
  }
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: expected a finite number, got '{}'", key, v));
  }
  return out;
}

using Setter = std::function<void(const std::string& key,
                                  const std::vector<std::string>& inputs)>;

Setter Int(int* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    const int64_t v = ParseInt(k, Joined(in));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(k + ": out of range");
    }
    *field = static_cast<int>(v);
  };
}
Setter Uint64(uint64_t* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    const int64_t v = ParseInt(k, Joined(in));
    if (v < 0) throw ConfigError(k + ": must be >= 0");
    *field = static_cast<uint64_t>(v);
  };
}
Setter Double(double* field, bool allow_inf = false) {
  return [field, allow_inf](const std::string& k,
                            const std::vector<std::string>& in) {
    *field = ParseDouble(k, Joined(in), allow_inf);
  };
}
Setter Bool(bool* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    *field = ParseBool(k, Joined(in));
  };
}
Setter String(std::string* field) {
  return [field](const std::string&, const std::vector<std::string>& in) {
    *field = Joined(in);
  };
}
Setter Path(fs::path* field) {
  return [field](const std::string&, const std::vector<std::string>& in) {
    *field = Joined(in);
  };
}
Setter IntList(std::vector<int>* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    field->clear();
    for (const std::string& s : SplitList(in)) {
      field->push_back(static_cast<int>(ParseInt(k, s)));
    }
  };
}
Setter SeedList(std::vector<uint64_t>* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    field->clear();
    for (const std::string& s : SplitList(in)) {
      const int64_t v = ParseInt(k, s);
      if (v < 0) throw ConfigError(k + ": seeds must be >= 0");
      field->push_back(static_cast<uint64_t>(v));
    }
  };
}
Setter DoubleList(std::vector<double>* field) {
  return [field](const std::string& k, const std::vector<std::string>& in) {
    field->clear();
    for (const std::string& s : SplitList(in)) field->push_back(ParseDouble(k, s));
  };
}

std::map<std::string, Setter> Bindings(ExperimentConfig* c) {
  SyntheticSpec& s = c->synthetic;
  ModelConfig& m = c->model;
  TrainConfig& t = c->train;
  return {
      {"data.source", String(&c->data.source)},
      {"data.train_dir", Path(&c->data.train_dir)},
      {"data.dev_dir", Path(&c->data.dev_dir)},
      {"data.word_vectors", Path(&c->data.word_vectors)},
      {"data.entity_vectors", Path(&c->data.entity_vectors)},
      {"data.validation_fraction", Double(&c->data.validation_fraction)},
      {"data.split_seed", Uint64(&c->data.split_seed)},

      {"synthetic.n_topics", Int(&s.n_topics)},
      {"synthetic.subtopics_per_topic", Int(&s.subtopics_per_topic)},
      {"synthetic.news_per_subtopic", Int(&s.news_per_subtopic)},
      {"synthetic.vocab_size", Int(&s.vocab_size)},
      {"synthetic.n_users", Int(&s.n_users)},
      {"synthetic.kappa", Double(&s.kappa, /*allow_inf=*/true)},
      {"synthetic.clicks_per_user", Int(&s.clicks_per_user)},
      {"synthetic.candidates_per_impression", Int(&s.candidates_per_impression)},
      {"synthetic.train_impressions_per_user", Int(&s.train_impressions_per_user)},
      {"synthetic.dev_impressions_per_user", Int(&s.dev_impressions_per_user)},
      {"synthetic.signature_words", Int(&s.signature_words)},
      {"synthetic.topic_words", Int(&s.topic_words)},
      {"synthetic.entities_per_subtopic", Int(&s.entities_per_subtopic)},
      {"synthetic.min_title_entities", Int(&s.min_title_entities)},
      {"synthetic.max_title_entities", Int(&s.max_title_entities)},
      {"synthetic.min_title_words", Int(&s.min_title_words)},
      {"synthetic.max_title_words", Int(&s.max_title_words)},
      {"synthetic.subtopic_word_prob", Double(&s.subtopic_word_prob)},
      {"synthetic.topic_word_prob", Double(&s.topic_word_prob)},
      {"synthetic.profile_candidate_fraction", Double(&s.profile_candidate_fraction)},
      {"synthetic.same_topic_candidate_fraction",
       Double(&s.same_topic_candidate_fraction)},
      {"synthetic.seed", Uint64(&s.seed)},

      {"model.word_dim", Int(&m.word_dim)},
      {"model.entity_dim", Int(&m.entity_dim)},
      {"model.text_heads", Int(&m.text_heads)},
      {"model.text_head_dim", Int(&m.text_head_dim)},
      {"model.entity_heads", Int(&m.entity_heads)},
      {"model.entity_head_dim", Int(&m.entity_head_dim)},
      {"model.text_query_dim", Int(&m.text_query_dim)},
      {"model.entity_query_dim", Int(&m.entity_query_dim)},
      {"model.news_dim", Int(&m.news_dim)},
      {"model.count_dim", Int(&m.count_dim)},
      {"model.max_count", Int(&m.max_count)},
      {"model.scale_attention", Bool(&m.scale_attention)},

      {"train.negatives", Int(&t.negatives)},
      {"train.learning_rate", Double(&t.learning_rate)},
      {"train.epochs", Int(&t.epochs)},
      {"train.batch_size", Int(&t.batch_size)},
      {"train.dropout", Double(&t.dropout)},
      {"train.freeze_word_embeddings", Bool(&t.freeze_word_embeddings)},
      {"train.clip_norm", Double(&t.clip_norm)},
      {"train.beta1", Double(&t.beta1)},
      {"train.beta2", Double(&t.beta2)},
      {"train.epsilon", Double(&t.epsilon)},

      {"match.lambda_s", Double(&t.match.lambda_s)},
      {"match.lambda_t", Double(&t.match.lambda_t)},
      {"match.use_subtopic", Bool(&t.match.use_subtopic)},
      {"match.use_topic", Bool(&t.match.use_topic)},
      {"match.use_user", Bool(&t.match.use_user)},

      {"eval.tie_half", Bool(&c->eval.tie_half)},
      {"eval.per_impression", Bool(&c->eval.per_impression)},

      {"recall.ks", IntList(&c->recall.ks)},
      {"recall.impression_pool", Bool(&c->recall.impression_pool)},
      {"recall.max_impressions", Int(&c->recall.max_impressions)},

      {"ablate.retrain", Bool(&c->ablate.retrain)},

      {"sweep.lambda_s", DoubleList(&c->sweep.lambda_s)},
      {"sweep.lambda_t", DoubleList(&c->sweep.lambda_t)},
      {"sweep.retrain", Bool(&c->sweep.retrain)},

      {"gradcheck.epsilon", Double(&c->gradcheck.epsilon)},
      {"gradcheck.tolerance", Double(&c->gradcheck.tolerance)},
      {"gradcheck.dim", Int(&c->gradcheck.dim)},
      {"gradcheck.scale", Double(&c->gradcheck.scale)},

      {"experiment.seeds", SeedList(&c->seeds)},
      {"experiment.out_dir", Path(&c->out_dir)},
  };
}

// ---------------------------------------------------------------------------
// Files and reports.

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void WriteJson(const fs::path& path, const json& j) {
  WriteText(path, j.dump(2) + "\n");
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string Relative(const fs::path& p, const fs::path& base) {
  return fs::path(p).lexically_relative(base).generic_string();
}

json SummaryJson(const std::vector<double>& values) {
  const Summary s = Summarize(values);
  return {{"mean", s.mean}, {"std", s.std}};
}

json MetricsSummary(const std::vector<MetricsReport>& reports) {
  std::vector<double> auc, mrr, ndcg5, ndcg10;
  for (const MetricsReport& r : reports) {
    auc.push_back(r.auc);
    mrr.push_back(r.mrr);
    ndcg5.push_back(r.ndcg5);
    ndcg10.push_back(r.ndcg10);
  }
  return {{"auc", SummaryJson(auc)},
          {"mrr", SummaryJson(mrr)},
          {"ndcg5", SummaryJson(ndcg5)},
          {"ndcg10", SummaryJson(ndcg10)}};
}

json MatchJson(const MatchConfig& m) {
  return {{"lambda_s", m.lambda_s},
          {"lambda_t", m.lambda_t},
          {"mask", m.MaskName()}};
}

// ---------------------------------------------------------------------------
// Prepared-data serialization.

// One behaviors.tsv line per impression keeps the cache compact.
json ImpressionsToJson(const std::vector<Impression>& imps) {
  json out = json::array();
  for (const Impression& imp : imps) out.push_back(ToBehaviorsTsvLine(imp));
  return out;
}

std::vector<Impression> ImpressionsFromJson(const json& j) {
  std::vector<Impression> out;
  out.reserve(j.size());
  for (const json& e : j) {
    std::optional<Impression> imp = ParseBehaviorsLine(e.get_ref<const std::string&>());
    if (!imp) throw std::runtime_error("corrupt prepared impression");
    out.push_back(std::move(*imp));
  }
  return out;
}

struct FileStamp {
  fs::path path;
  json ToJson() const {
    if (!fs::exists(path)) return {{"path", path.string()}, {"exists", false}};
    return {{"path", path.string()},
            {"size", fs::file_size(path)},
            {"mtime", fs::last_write_time(path).time_since_epoch().count()}};
  }
};

fs::path PreparedDir(const ExperimentConfig& c) { return c.out_dir / "prepared"; }

json InputManifest(const ExperimentConfig& c) {
  json m;
  m["source"] = c.data.source;
  m["validation_fraction"] = c.data.validation_fraction;
  m["split_seed"] = c.data.split_seed;
  if (c.data.source == "synthetic") {
    m["synthetic"] = c.synthetic;
  } else {
    json files = json::array();
    for (const fs::path& dir : {c.data.train_dir, c.data.dev_dir}) {
      files.push_back(FileStamp{dir / "news.tsv"}.ToJson());
      files.push_back(FileStamp{dir / "behaviors.tsv"}.ToJson());
    }
    m["files"] = files;
  }
  return m;
}

void RequireFile(const fs::path& p) {
  if (!fs::is_regular_file(p)) {
    throw std::runtime_error("missing input file: " + p.string());
  }
}

json ParseReportJson(const NewsParseReport& r) {
  return {{"rows", r.rows},
          {"parsed", r.parsed},
          {"malformed", r.malformed},
          {"duplicates", r.duplicates},
          {"missing_entities", r.missing_entities}};
}

PreparedData ParseCorpus(const ExperimentConfig& config, const fs::path& train_dir,
                         const fs::path& dev_dir) {
  for (const fs::path& dir : {train_dir, dev_dir}) {
    RequireFile(dir / "news.tsv");
    RequireFile(dir / "behaviors.tsv");
  }
  PreparedData data;
  const NewsParseReport train_news = ParseNewsCatalog(
      train_dir / "news.tsv", VocabMode::kBuild, &data.vocab, &data.catalog);
  const NewsParseReport dev_news = ParseNewsCatalog(
      dev_dir / "news.tsv", VocabMode::kBuild, &data.vocab, &data.catalog);
  BehaviorsParseReport train_beh, dev_beh;
  std::vector<Impression> train = ParseBehaviors(train_dir / "behaviors.tsv", &train_beh);
  data.test = ParseBehaviors(dev_dir / "behaviors.tsv", &dev_beh);

  // Seeded hold-out; both parts keep the original order.
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.data.split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t n_val = static_cast<size_t>(
      std::llround(config.data.validation_fraction * static_cast<double>(train.size())));
  std::vector<bool> is_val(train.size(), false);
  for (size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  for (size_t i = 0; i < train.size(); ++i) {
    (is_val[i] ? data.validation : data.train).push_back(std::move(train[i]));
  }

  std::set<std::string> users;
  long clicks = 0;
  long history_clicks = 0;
  for (const auto* split : {&data.train, &data.validation, &data.test}) {
    for (const Impression& imp : *split) {
      users.insert(imp.user_id);
      history_clicks += static_cast<long>(imp.history.size());
      for (const Candidate& c : imp.candidates) clicks += c.label;
    }
  }
  data.stats = {
      {"news", data.catalog.size()},
      {"topics", data.vocab.num_topics()},
      {"subtopics", data.vocab.num_subtopics()},
      {"words", data.vocab.num_words() - 1},
      {"entities", data.vocab.num_entities() - 1},
      {"users", users.size()},
      {"impressions",
       {{"train", data.train.size()},
        {"validation", data.validation.size()},
        {"test", data.test.size()}}},
      {"clicks", clicks},
      {"history_clicks", history_clicks},
      {"parse",
       {{"train_news", ParseReportJson(train_news)},
        {"dev_news", ParseReportJson(dev_news)},
        {"train_behaviors", {{"rows", train_beh.rows}, {"rejected", train_beh.rejected}}},
        {"dev_behaviors", {{"rows", dev_beh.rows}, {"rejected", dev_beh.rejected}}}}}};
  return data;
}

// ---------------------------------------------------------------------------
// Shared command pieces.

ModelParams LoadSeedCheckpoint(const ExperimentConfig& config, uint64_t seed) {
  const fs::path path = CheckpointPath(config, seed);
  if (!fs::is_regular_file(path)) {
    throw std::runtime_error("no checkpoint for seed " + std::to_string(seed) +
                             " at " + path.string() + "; run `train` first");
  }
  return LoadCheckpoint(path);
}

struct TrainedModel {
  ModelParams params;
  json report;
};

TrainedModel TrainOne(const ExperimentConfig& config, const PreparedData& data,
                      uint64_t seed, const MatchConfig& match,
                      const fs::path& checkpoint, const fs::path& log) {
  TrainedModel out{BuildModel(config, data, seed), {}};
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.match = match;
  TrainOptions options;
  options.checkpoint_path = checkpoint;
  options.log_path = log;
  options.checkpoint_metadata = {{"seed", seed}, {"match", MatchJson(match)}};
  if (log.has_parent_path()) fs::create_directories(log.parent_path());
  if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
  const TrainReport report =
      Train(data.catalog, data.train, data.validation, tc, &out.params, options);
  out.report = report.ToJson();
  out.report["checkpoint"] = Relative(checkpoint, config.out_dir);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::Validate() const {
  try {
    if (data.source != "mind" && data.source != "synthetic") {
      throw ConfigError("data.source must be 'mind' or 'synthetic'");
    }
    if (data.source == "mind" && (data.train_dir.empty() || data.dev_dir.empty())) {
      throw ConfigError("data.train_dir and data.dev_dir are required for MIND data");
    }
    if (!(data.validation_fraction >= 0.0 && data.validation_fraction < 1.0)) {
      throw ConfigError("data.validation_fraction must be in [0, 1)");
    }
    if (data.source == "synthetic") synthetic.Validate();
    ModelConfig m = model;
    m.Validate();
    train.Validate();
    recall.Validate();
    if (sweep.lambda_s.empty() || sweep.lambda_t.empty()) {
      throw ConfigError("sweep grids must be non-empty");
    }
    if (!(gradcheck.epsilon > 0.0) || !(gradcheck.tolerance > 0.0) ||
        !(gradcheck.scale > 0.0) || gradcheck.dim < 1 || gradcheck.dim > 8) {
      throw ConfigError("gradcheck: epsilon, tolerance, scale > 0 and 1 <= dim <= 8");
    }
    if (seeds.empty()) throw ConfigError("experiment.seeds must be non-empty");
    if (out_dir.empty()) throw ConfigError("experiment.out_dir must be set");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json ExperimentConfig::ToJson() const {
  const TrainConfig& t = train;
  return {
      {"data",
       {{"source", data.source},
        {"train_dir", data.train_dir.string()},
        {"dev_dir", data.dev_dir.string()},
        {"word_vectors", data.word_vectors.string()},
        {"entity_vectors", data.entity_vectors.string()},
        {"validation_fraction", data.validation_fraction},
        {"split_seed", data.split_seed}}},
      {"synthetic", synthetic},
      {"model", model},
      {"train",
       {{"negatives", t.negatives},
        {"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"dropout", t.dropout},
        {"freeze_word_embeddings", t.freeze_word_embeddings},
        {"clip_norm", t.clip_norm}}},
      {"match",
       {{"lambda_s", t.match.lambda_s},
        {"lambda_t", t.match.lambda_t},
        {"use_subtopic", t.match.use_subtopic},
        {"use_topic", t.match.use_topic},
        {"use_user", t.match.use_user}}},
      {"recall",
       {{"ks", recall.ks},
        {"impression_pool", recall.impression_pool},
        {"max_impressions", recall.max_impressions}}},
      {"seeds", seeds}};
}

ExperimentConfig ParseExperimentConfig(const std::string& text) {
  ExperimentConfig config;
  const std::map<std::string, Setter> bindings = Bindings(&config);
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  std::set<std::string> seen;
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    auto it = bindings.find(key);
    if (it == bindings.end()) throw ConfigError("unknown config key: " + key);
    if (!seen.insert(key).second) throw ConfigError("duplicate config key: " + key);
    it->second(key, item.inputs);
  }
  config.Validate();
  return config;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config = ParseExperimentConfig(buffer.str());
  // Relative data paths are taken relative to the config file.
  const fs::path base = path.parent_path();
  for (fs::path* p : {&config.data.train_dir, &config.data.dev_dir,
                      &config.data.word_vectors, &config.data.entity_vectors}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

void SavePrepared(const PreparedData& data, const fs::path& path) {
  json articles = json::array();
  for (const NewsArticle& a : data.catalog.articles()) {
    articles.push_back({a.news_id, a.topic_id, a.subtopic_id,
                        std::vector<int>(a.word_ids.begin(), a.word_ids.end()),
                        std::vector<int>(a.entity_ids.begin(), a.entity_ids.end())});
  }
  const json j = {
      {"vocab",
       {{"words", data.vocab.words()},
        {"entities", data.vocab.entities()},
        {"topics", data.vocab.topics()},
        {"subtopics", data.vocab.subtopics()},
        {"subtopic_parents", data.vocab.subtopic_parents()}}},
      {"articles", articles},
      {"train", ImpressionsToJson(data.train)},
      {"validation", ImpressionsToJson(data.validation)},
      {"test", ImpressionsToJson(data.test)},
      {"stats", data.stats}};
  const std::vector<uint8_t> bytes = json::to_msgpack(j);
  WriteText(path, std::string(bytes.begin(), bytes.end()));
}

PreparedData LoadPrepared(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const json j = json::from_msgpack(bytes);
  PreparedData data;
  const json& v = j.at("vocab");
  data.vocab = Vocabulary::FromTables(
      v.at("words").get<std::vector<std::string>>(),
      v.at("entities").get<std::vector<std::string>>(),
      v.at("topics").get<std::vector<std::string>>(),
      v.at("subtopics").get<std::vector<std::string>>(),
      v.at("subtopic_parents").get<std::vector<int>>());
  for (const json& a : j.at("articles")) {
    NewsArticle article;
    article.news_id = a.at(0).get<std::string>();
    article.topic_id = a.at(1).get<int>();
    article.subtopic_id = a.at(2).get<int>();
    const auto words = a.at(3).get<std::vector<int>>();
    const auto entities = a.at(4).get<std::vector<int>>();
    if (words.size() != article.word_ids.size() ||
        entities.size() != article.entity_ids.size()) {
      throw std::runtime_error("corrupt prepared data: " + path.string());
    }
    std::copy(words.begin(), words.end(), article.word_ids.begin());
    std::copy(entities.begin(), entities.end(), article.entity_ids.begin());
    article.word_count = static_cast<int>(
        std::count_if(words.begin(), words.end(), [](int w) { return w != kPaddingId; }));
    article.entity_count = static_cast<int>(std::count_if(
        entities.begin(), entities.end(), [](int e) { return e != kPaddingId; }));
    data.catalog.Add(std::move(article));
  }
  data.train = ImpressionsFromJson(j.at("train"));
  data.validation = ImpressionsFromJson(j.at("validation"));
  data.test = ImpressionsFromJson(j.at("test"));
  data.stats = j.at("stats");
  return data;
}

PreparedData PrepareData(const ExperimentConfig& config, bool* from_cache) {
  const fs::path dir = PreparedDir(config);
  const json manifest = InputManifest(config);
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path data_path = dir / "dataset.msgpack";
  if (fs::is_regular_file(manifest_path) && fs::is_regular_file(data_path)) {
    std::ifstream in(manifest_path);
    json cached;
    try {
      in >> cached;
    } catch (const json::exception&) {
      cached = nullptr;
    }
    if (cached == manifest) {
      if (from_cache != nullptr) *from_cache = true;
      return LoadPrepared(data_path);
    }
  }
  if (from_cache != nullptr) *from_cache = false;
  fs::path train_dir = config.data.train_dir;
  fs::path dev_dir = config.data.dev_dir;
  if (config.data.source == "synthetic") {
    const fs::path root = config.out_dir / "synthetic";
    WriteMindFormat(GenerateSynthetic(config.synthetic), root);
    train_dir = root / "train";
    dev_dir = root / "dev";
  }
  PreparedData data = ParseCorpus(config, train_dir, dev_dir);
  SavePrepared(data, data_path);
  WriteJson(manifest_path, manifest);
  return data;
}

PreparedData LoadPreparedForConfig(const ExperimentConfig& config) {
  const fs::path dir = PreparedDir(config);
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path data_path = dir / "dataset.msgpack";
  if (!fs::is_regular_file(manifest_path) || !fs::is_regular_file(data_path)) {
    throw std::runtime_error("no prepared data under " + dir.string() +
                             "; run `prepare` first");
  }
  std::ifstream in(manifest_path);
  json cached;
  in >> cached;
  if (cached != InputManifest(config)) {
    throw std::runtime_error("prepared data under " + dir.string() +
                             " is stale; rerun `prepare`");
  }
  return LoadPrepared(data_path);
}

ModelParams BuildModel(const ExperimentConfig& config, const PreparedData& data,
                       uint64_t seed) {
  ModelConfig mc = config.model;
  mc.num_words = data.vocab.num_words();
  mc.num_entities = data.vocab.num_entities();
  mc.num_topics = std::max(1, data.vocab.num_topics());
  mc.num_subtopics = std::max(1, data.vocab.num_subtopics());
  ModelParams params = InitModel(mc, seed);
  if (!config.data.word_vectors.empty() || !config.data.entity_vectors.empty()) {
    const PretrainedTables tables = LoadPretrainedEmbeddings(
        data.vocab, config.data.word_vectors, config.data.entity_vectors,
        mc.word_dim, mc.entity_dim, DeriveSeed(seed, 11));
    spdlog::info("pretrained coverage: words {:.3f}, entities {:.3f}",
                 tables.word_coverage, tables.entity_coverage);
    SetEmbeddings(tables.words, tables.entities, &params);
  }
  return params;
}

fs::path CheckpointPath(const ExperimentConfig& config, uint64_t seed) {
  return config.out_dir / "checkpoints" / fmt::format("seed_{}.ckpt", seed);
}

json RunPrepare(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  bool from_cache = false;
  const PreparedData data = PrepareData(config, &from_cache);
  json report = data.stats;
  report["timing"] = {{"seconds", Seconds(start)}, {"from_cache", from_cache}};
  WriteJson(config.out_dir / "stats.json", report);
  spdlog::info("prepared {} news, {} topics, {} subtopics{}",
               data.catalog.size(), data.vocab.num_topics(),
               data.vocab.num_subtopics(), from_cache ? " (cached)" : "");
  return report;
}

json RunTrain(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = LoadPreparedForConfig(config);
  json seeds = json::array();
  std::vector<double> best_auc;
  for (const uint64_t seed : config.seeds) {
    spdlog::info("training seed {}", seed);
    TrainedModel m = TrainOne(
        config, data, seed, config.train.match, CheckpointPath(config, seed),
        config.out_dir / "logs" / fmt::format("train_seed_{}.jsonl", seed));
    m.report["seed"] = seed;
    if (m.report["best_val_auc"].is_number()) {
      best_auc.push_back(m.report["best_val_auc"].get<double>());
    }
    seeds.push_back(m.report);
  }
  json report = {{"match", MatchJson(config.train.match)},
                 {"seeds", seeds},
                 {"best_val_auc", SummaryJson(best_auc)},
                 {"timing", {{"seconds", Seconds(start)}}}};
  WriteJson(config.out_dir / "train.json", report);
  return report;
}

json RunEvaluate(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = LoadPreparedForConfig(config);
  json seeds = json::array();
  std::vector<MetricsReport> reports;
  for (const uint64_t seed : config.seeds) {
    const ModelParams params = LoadSeedCheckpoint(config, seed);
    reports.push_back(EvaluateRanking(data.catalog, data.test, params,
                                      config.train.match, config.eval.tie_half));
    json r = reports.back().ToJson(config.eval.per_impression);
    r["seed"] = seed;
    seeds.push_back(r);
  }
  json report = {{"match", MatchJson(config.train.match)},
                 {"tie_half", config.eval.tie_half},
                 {"seeds", seeds},
                 {"summary", MetricsSummary(reports)},
                 {"timing", {{"seconds", Seconds(start)}}}};
  WriteJson(config.out_dir / "evaluate.json", report);
  return report;
}

json RunRecall(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = LoadPreparedForConfig(config);
  json seeds = json::array();
  std::vector<RecallReport> reports;
  for (const uint64_t seed : config.seeds) {
    const ModelParams params = LoadSeedCheckpoint(config, seed);
    reports.push_back(EvaluateRecall(data.catalog, data.test, params, config.recall));
    json r = reports.back().ToJson();
    r["seed"] = seed;
    seeds.push_back(r);
  }
  const size_t num_k = config.recall.ks.size();
  json curves = json::array();
  std::ostringstream csv;
  csv << "k,multi_recall_mean,multi_recall_std,single_recall_mean,"
         "single_recall_std,multi_ilad_mean,multi_ilad_std,single_ilad_mean,"
         "single_ilad_std\n";
  for (size_t j = 0; j < num_k; ++j) {
    std::vector<double> mr, sr, mi, si;
    for (const RecallReport& r : reports) {
      mr.push_back(r.multi_recall[j]);
      sr.push_back(r.single_recall[j]);
      mi.push_back(r.multi_ilad[j]);
      si.push_back(r.single_ilad[j]);
    }
    const Summary a = Summarize(mr), b = Summarize(sr), c = Summarize(mi),
                  d = Summarize(si);
    curves.push_back({{"k", config.recall.ks[j]},
                      {"multi_recall", SummaryJson(mr)},
                      {"single_recall", SummaryJson(sr)},
                      {"multi_ilad", SummaryJson(mi)},
                      {"single_ilad", SummaryJson(si)}});
    csv << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       config.recall.ks[j], a.mean, a.std, b.mean, b.std, c.mean,
                       c.std, d.mean, d.std);
  }
  json report = {{"pool", config.recall.impression_pool ? "impression" : "catalog"},
                 {"seeds", seeds},
                 {"summary", curves},
                 {"timing", {{"seconds", Seconds(start)}}}};
  WriteJson(config.out_dir / "recall.json", report);
  WriteText(config.out_dir / "recall.csv", csv.str());
  return report;
}

std::vector<MatchConfig> AblationMasks(const MatchConfig& base) {
  std::vector<MatchConfig> masks;
  const bool flags[][3] = {  // subtopic, topic, user
      {true, true, true},
      {false, false, true},
      {false, true, true},
      {true, false, true}};
  for (const auto& f : flags) {
    MatchConfig m = base;
    m.use_subtopic = f[0];
    m.use_topic = f[1];
    m.use_user = f[2];
    masks.push_back(m);
  }
  return masks;
}

json RunAblate(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = LoadPreparedForConfig(config);
  const std::vector<MatchConfig> masks = AblationMasks(config.train.match);
  // results[mask][seed]
  std::vector<std::vector<MetricsReport>> results(masks.size());
  json runs = json::array();
  for (const uint64_t seed : config.seeds) {
    if (config.ablate.retrain) {
      for (size_t m = 0; m < masks.size(); ++m) {
        const std::string name = masks[m].MaskName();
        spdlog::info("ablation: training '{}' seed {}", name, seed);
        TrainedModel tm = TrainOne(
            config, data, seed, masks[m],
            config.out_dir / "ablation" / fmt::format("{}_seed_{}.ckpt", name, seed),
            config.out_dir / "logs" / fmt::format("ablate_{}_seed_{}.jsonl", name, seed));
        results[m].push_back(EvaluateRanking(data.catalog, data.test, tm.params,
                                             masks[m], config.eval.tie_half));
        runs.push_back({{"seed", seed}, {"mask", name}, {"train", tm.report}});
      }
    } else {
      const fs::path ckpt = CheckpointPath(config, seed);
      ModelParams params;
      if (fs::is_regular_file(ckpt)) {
        params = LoadCheckpoint(ckpt);
      } else {
        TrainedModel tm = TrainOne(
            config, data, seed, masks[0], ckpt,
            config.out_dir / "logs" / fmt::format("train_seed_{}.jsonl", seed));
        params = std::move(tm.params);
        runs.push_back({{"seed", seed}, {"mask", masks[0].MaskName()}, {"train", tm.report}});
      }
      const EvaluationCache cache =
          BuildEvaluationCache(data.catalog, data.test, params);
      for (size_t m = 0; m < masks.size(); ++m) {
        results[m].push_back(
            ComputeMetrics(Rescore(cache, masks[m]), config.eval.tie_half));
      }
    }
  }

  // Per-impression AUC averaged over seeds, for paired tests against "full".
  auto mean_auc = [&](size_t m) {
    std::vector<double> out(results[m][0].auc_values.size(), 0.0);
    for (const MetricsReport& r : results[m]) {
      for (size_t i = 0; i < out.size(); ++i) out[i] += r.auc_values[i];
    }
    for (double& x : out) x /= static_cast<double>(results[m].size());
    return out;
  };
  const std::vector<double> full_auc = mean_auc(0);
  json table = json::array();
  std::ostringstream csv;
  csv << "mask,auc_mean,auc_std,mrr_mean,mrr_std,ndcg5_mean,ndcg5_std,"
         "ndcg10_mean,ndcg10_std,t_vs_full,p_vs_full\n";
  for (size_t m = 0; m < masks.size(); ++m) {
    json row = {{"mask", masks[m].MaskName()}, {"summary", MetricsSummary(results[m])}};
    json per_seed = json::array();
    for (size_t s = 0; s < results[m].size(); ++s) {
      json r = results[m][s].ToJson();
      r["seed"] = config.seeds[s];
      per_seed.push_back(r);
    }
    row["seeds"] = per_seed;
    PairedTTest test;
    if (m > 0 && full_auc.size() >= 2) {
      test = PairedT(full_auc, mean_auc(m));
      row["paired_t_vs_full"] = {{"mean_auc_difference", 100.0 * test.mean_difference},
                                 {"t", test.t},
                                 {"p_value", test.p_value},
                                 {"n", test.n}};
    }
    table.push_back(row);
    const json& s = row["summary"];
    csv << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n",
                       masks[m].MaskName(), s["auc"]["mean"].get<double>(),
                       s["auc"]["std"].get<double>(), s["mrr"]["mean"].get<double>(),
                       s["mrr"]["std"].get<double>(), s["ndcg5"]["mean"].get<double>(),
                       s["ndcg5"]["std"].get<double>(), s["ndcg10"]["mean"].get<double>(),
                       s["ndcg10"]["std"].get<double>(),
                       m > 0 ? fmt::format("{:.17g}", test.t) : "",
                       m > 0 ? fmt::format("{:.17g}", test.p_value) : "");
  }
  json report = {{"retrain", config.ablate.retrain},
                 {"table", table},
                 {"runs", runs},
                 {"timing", {{"seconds", Seconds(start)}}}};
  WriteJson(config.out_dir / "ablation.json", report);
  WriteText(config.out_dir / "ablation.csv", csv.str());
  return report;
}

json RunSweep(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = LoadPreparedForConfig(config);
  std::ostringstream csv;
  csv << "seed,lambda_s,lambda_t,auc,mrr,ndcg5,ndcg10\n";
  json cells = json::array();
  // grid[i][j] -> per-seed reports
  std::vector<std::vector<std::vector<MetricsReport>>> grid(
      config.sweep.lambda_s.size(),
      std::vector<std::vector<MetricsReport>>(config.sweep.lambda_t.size()));
  for (const uint64_t seed : config.seeds) {
    std::optional<EvaluationCache> cache;
    if (!config.sweep.retrain) {
      cache = BuildEvaluationCache(data.catalog, data.test,
                                   LoadSeedCheckpoint(config, seed));
    }
    for (size_t i = 0; i < config.sweep.lambda_s.size(); ++i) {
      for (size_t j = 0; j < config.sweep.lambda_t.size(); ++j) {
        MatchConfig match = config.train.match;
        match.lambda_s = config.sweep.lambda_s[i];
        match.lambda_t = config.sweep.lambda_t[j];
        match.Validate();
        MetricsReport r;
        if (cache) {
          r = ComputeMetrics(Rescore(*cache, match), config.eval.tie_half);
        } else {
          const std::string tag = fmt::format("ls{}_lt{}_seed_{}", match.lambda_s,
                                              match.lambda_t, seed);
          TrainedModel tm = TrainOne(config, data, seed, match,
                                     config.out_dir / "sweep" / (tag + ".ckpt"),
                                     config.out_dir / "logs" / ("sweep_" + tag + ".jsonl"));
          r = EvaluateRanking(data.catalog, data.test, tm.params, match,
                              config.eval.tie_half);
        }
        csv << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                           seed, match.lambda_s, match.lambda_t, r.auc, r.mrr,
                           r.ndcg5, r.ndcg10);
        grid[i][j].push_back(std::move(r));
      }
    }
  }
  for (size_t i = 0; i < config.sweep.lambda_s.size(); ++i) {
    for (size_t j = 0; j < config.sweep.lambda_t.size(); ++j) {
      json per_seed = json::array();
      for (const MetricsReport& r : grid[i][j]) per_seed.push_back(r.ToJson());
      cells.push_back({{"lambda_s", config.sweep.lambda_s[i]},
                       {"lambda_t", config.sweep.lambda_t[j]},
                       {"summary", MetricsSummary(grid[i][j])},
                       {"seeds", per_seed}});
    }
  }
  json report = {{"retrain", config.sweep.retrain},
                 {"mask", config.train.match.MaskName()},
                 {"cells", cells},
                 {"timing", {{"seconds", Seconds(start)}}}};
  WriteJson(config.out_dir / "sweep.json", report);
  WriteText(config.out_dir / "sweep.csv", csv.str());
  return report;
}

GradientCheckInstance MakeGradientCheckInstance(int dim, double scale,
                                                uint64_t seed) {
  SyntheticSpec spec;
  spec.n_topics = 3;
  spec.subtopics_per_topic = 2;
  spec.news_per_subtopic = 4;
  spec.vocab_size = 60;
  spec.signature_words = 5;
  spec.topic_words = 3;
  spec.entities_per_subtopic = 6;
  spec.min_title_entities = 3;
  spec.max_title_entities = 5;
  spec.n_users = 1;
  spec.min_title_words = 5;
  spec.max_title_words = 8;
  spec.seed = seed;
  const SyntheticCorpus corpus = GenerateSynthetic(spec);
  GradientCheckInstance out;
  BuildCatalog(corpus, &out.vocab, &out.catalog);

  ModelConfig mc;
  mc.num_words = out.vocab.num_words();
  mc.num_entities = out.vocab.num_entities();
  mc.num_topics = out.vocab.num_topics();
  mc.num_subtopics = out.vocab.num_subtopics();
  mc.word_dim = dim;
  mc.entity_dim = dim;
  mc.text_heads = std::max(1, dim / 4);
  mc.text_head_dim = dim / mc.text_heads;
  mc.entity_heads = mc.text_heads;
  mc.entity_head_dim = mc.text_head_dim;
  mc.text_query_dim = dim;
  mc.entity_query_dim = dim;
  mc.news_dim = dim;
  mc.count_dim = dim;
  out.params = InitModel(mc, DeriveSeed(seed, 5));
  RandomizeParams(&out.params, scale, DeriveSeed(seed, 7));

  // News i of global subtopic s sits at catalog index 4 s + i. Topic 0 gets
  // counts {3, 1}, topic 1 gets {2}; topics are 4 vs 2 clicks.
  const std::vector<int> history = {0, 4, 1, 8, 2, 9};
  out.sample.index = std::make_shared<const InterestIndex>(
      BuildInterestIndexFromNews(history, out.catalog));
  out.sample.positive = 3;                  // clicked subtopic
  out.sample.negatives = {5, 10, 12, 16};  // ..., unclicked subtopic/topic
  return out;
}

json RunGradcheck(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const GradientCheckInstance inst = MakeGradientCheckInstance(
      config.gradcheck.dim, config.gradcheck.scale, config.seeds.front());
  const GradientCheckReport r =
      GradientCheck(inst.params, inst.sample, inst.catalog, config.train.match,
                    config.gradcheck.epsilon);
  json report = r.ToJson();
  report["epsilon"] = config.gradcheck.epsilon;
  report["tolerance"] = config.gradcheck.tolerance;
  report["scale"] = config.gradcheck.scale;
  report["pass"] = r.max_relative_error < config.gradcheck.tolerance;
  report["model"] = inst.params.config;
  report["timing"] = {{"seconds", Seconds(start)}};
  WriteJson(config.out_dir / "gradcheck.json", report);
  return report;
}

json StripTiming(const json& report) {
  if (report.is_object()) {
    json out = json::object();
    for (auto it = report.begin(); it != report.end(); ++it) {
      if (it.key() == "timing") continue;
      out[it.key()] = StripTiming(it.value());
    }
    return out;
  }
  if (report.is_array()) {
    json out = json::array();
    for (const json& e : report) out.push_back(StripTiming(e));
    return out;
  }
  return report;
}

Summary Summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace hierec
