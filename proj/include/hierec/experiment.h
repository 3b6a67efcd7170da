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

// Config-driven experiment commands behind the `hierec` CLI.
//
// Every command writes its report under ExperimentConfig::out_dir and returns
// it. Reports keep wall-clock numbers under a top-level "timing" key; all
// other fields are a pure function of the config and seeds.

#ifndef HIEREC_EXPERIMENT_H_
#define HIEREC_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierec/data_ingest.h"
#include "hierec/evaluation.h"
#include "hierec/model.h"
#include "hierec/synthetic.h"
#include "hierec/training.h"

namespace hierec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  // "mind" reads train_dir/dev_dir; "synthetic" generates a corpus from the
  // [synthetic] section under <out_dir>/synthetic first.
  std::string source = "mind";
  std::filesystem::path train_dir;
  std::filesystem::path dev_dir;
  std::filesystem::path word_vectors;    // optional, GloVe text format
  std::filesystem::path entity_vectors;  // optional, TransE .vec format
  // Share of train impressions held out for model selection.
  double validation_fraction = 0.05;
  uint64_t split_seed = 7;
};

struct EvalOptions {
  bool tie_half = false;
  bool per_impression = false;
};

struct SweepConfig {
  std::vector<double> lambda_s = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};
  std::vector<double> lambda_t = {0.06, 0.09, 0.12, 0.15, 0.18};
  // Retrain one model per grid cell instead of rescoring cached components.
  bool retrain = false;
};

struct AblationConfig {
  // false: mask the full model's scores after training.
  bool retrain = true;
};

struct GradcheckConfig {
  double epsilon = 1e-5;
  double tolerance = 1e-3;
  int dim = 8;
  // Parameters are redrawn from U(-scale, scale) before checking.
  double scale = 0.7;
};

struct ExperimentConfig {
  DataConfig data;
  SyntheticSpec synthetic;
  ModelConfig model;
  TrainConfig train;  // train.match holds the matching config
  EvalOptions eval;
  RecallConfig recall;
  AblationConfig ablate;
  SweepConfig sweep;
  GradcheckConfig gradcheck;
  std::vector<uint64_t> seeds = {1};
  std::filesystem::path out_dir = "out";

  // Throws ConfigError.
  void Validate() const;
  nlohmann::json ToJson() const;
};

// INI-style "key = value" text with [section] headers. Unknown sections or
// keys, and malformed values, throw ConfigError.
ExperimentConfig ParseExperimentConfig(const std::string& text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

struct PreparedData {
  Vocabulary vocab;
  Catalog catalog;
  std::vector<Impression> train;
  std::vector<Impression> validation;
  std::vector<Impression> test;
  nlohmann::json stats;
};

void SavePrepared(const PreparedData& data, const std::filesystem::path& path);
PreparedData LoadPrepared(const std::filesystem::path& path);

// Parses (or generates) the corpus, or reloads the cache when its manifest
// still matches the inputs. `from_cache` reports which happened.
PreparedData PrepareData(const ExperimentConfig& config, bool* from_cache = nullptr);
// Throws std::runtime_error when `prepare` has not been run.
PreparedData LoadPreparedForConfig(const ExperimentConfig& config);

// Fresh parameters for `seed`, with pretrained vectors when configured.
ModelParams BuildModel(const ExperimentConfig& config, const PreparedData& data,
                       uint64_t seed);

std::filesystem::path CheckpointPath(const ExperimentConfig& config, uint64_t seed);

nlohmann::json RunPrepare(const ExperimentConfig& config);
nlohmann::json RunTrain(const ExperimentConfig& config);
nlohmann::json RunEvaluate(const ExperimentConfig& config);
nlohmann::json RunRecall(const ExperimentConfig& config);
nlohmann::json RunAblate(const ExperimentConfig& config);
nlohmann::json RunSweep(const ExperimentConfig& config);
// report["pass"] tells whether the error is below the tolerance.
nlohmann::json RunGradcheck(const ExperimentConfig& config);

// A tiny model, catalog and training sample for gradient checking. The
// history has distinct click counts inside every attention group (equal
// counts make the count embeddings a softmax-invariant shift, i.e. an exactly
// flat direction that finite differences only see as rounding noise), and
// the negatives cover an unclicked subtopic and an unclicked topic.
struct GradientCheckInstance {
  Vocabulary vocab;
  Catalog catalog;
  ModelParams params;
  TrainingSample sample;
};
GradientCheckInstance MakeGradientCheckInstance(int dim, double scale,
                                                uint64_t seed);

// Copy of `report` with every "timing" member removed, recursively.
nlohmann::json StripTiming(const nlohmann::json& report);

// Mean and sample standard deviation (0 for a single value).
struct Summary {
  double mean = 0.0;
  double std = 0.0;
};
Summary Summarize(const std::vector<double>& values);

// The four score masks compared by the ablation.
std::vector<MatchConfig> AblationMasks(const MatchConfig& base);

}  // namespace hierec

#endif  // HIEREC_EXPERIMENT_H_
