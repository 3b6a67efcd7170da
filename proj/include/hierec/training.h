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

// Negative-sampling training with Adam, and a finite-difference gradient
// check over every parameter scalar.

#ifndef HIEREC_TRAINING_H_
#define HIEREC_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierec/autodiff.h"
#include "hierec/data_ingest.h"
#include "hierec/matching.h"
#include "hierec/model.h"
#include "hierec/news_encoder.h"
#include "hierec/random.h"

namespace hierec {

struct TrainConfig {
  int negatives = 4;  // K
  double learning_rate = 1e-4;
  int epochs = 5;
  int batch_size = 32;
  double dropout = 0.2;
  uint64_t seed = 0;
  MatchConfig match;
  bool freeze_word_embeddings = false;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws std::invalid_argument on an out-of-range field.
  void Validate() const;
};

// -log(exp(o_pos) / (exp(o_pos) + sum_j exp(o_neg_j))), shifted by the max
// score. Throws std::invalid_argument for K = 0 and std::domain_error for
// non-finite scores.
double NceLoss(double o_pos, std::span<const double> o_negs);

// Scalar NCE loss graph of one sample (target index 0 is the positive).
// Passing `dropout` enables training-mode dropout.
Var SampleLoss(Graph& g, const TrainingSample& sample, const Catalog& catalog,
               const ModelParams& params, const MatchConfig& match,
               const DropoutContext* dropout);
double EvaluateSampleLoss(const TrainingSample& sample, const Catalog& catalog,
                          const ModelParams& params, const MatchConfig& match);

// Dense gradient accumulator, one buffer per parameter.
class GradientBuffer {
 public:
  explicit GradientBuffer(const ModelParams& params);

  // Adds `scale` times the gradients collected in `g`.
  void Accumulate(const Graph& g, Real scale);
  void SetZero();
  double GlobalNorm() const;
  void Scale(Real factor);
  const Matrix& operator[](const Parameter& p) const;

 private:
  std::map<const Parameter*, Matrix> grads_;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& params, const TrainConfig& config);

  // One update of every trainable parameter (frozen ones are skipped).
  void Step(const GradientBuffer& grads, ModelParams* params);
  int steps() const { return step_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  bool freeze_words_;
  int step_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_auc = 0.0;  // x100; NaN without validation data
  int samples = 0;
  double seconds = 0.0;

  // Training-log line; `seconds` is the only timing field.
  nlohmann::json ToJson() const;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  std::filesystem::path checkpoint;
  SamplingReport sampling;  // first epoch

  nlohmann::json ToJson() const;
};

struct TrainOptions {
  // Best-validation parameters are written here when non-empty.
  std::filesystem::path checkpoint_path;
  // JSON-lines log, one line per epoch, when non-empty.
  std::filesystem::path log_path;
  nlohmann::json checkpoint_metadata;
  std::function<void(const EpochLog&)> on_epoch;
};

// Trains `params` in place and leaves the best-validation parameters in it
// (the last epoch's when `validation` is empty). Negatives are resampled
// each epoch. Deterministic in config.seed. Throws std::runtime_error when
// the loss diverges.
TrainReport Train(const Catalog& catalog, std::span<const Impression> train,
                  std::span<const Impression> validation,
                  const TrainConfig& config, ModelParams* params,
                  const TrainOptions& options = {});

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  int worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t scalars_checked = 0;
  std::map<std::string, double> per_parameter;  // max error per tensor

  nlohmann::json ToJson() const;
};

// Compares the analytic NCE-loss gradient of every parameter scalar with the
// central difference (f(x + eps) - f(x - eps)) / 2 eps. Relative error is
// |g_a - g_n| / (|g_a| + |g_n| + 1e-12). Dropout is off.
GradientCheckReport GradientCheck(const ModelParams& params,
                                  const TrainingSample& sample,
                                  const Catalog& catalog,
                                  const MatchConfig& match, double epsilon);

}  // namespace hierec

#endif  // HIEREC_TRAINING_H_
