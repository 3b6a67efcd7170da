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

#include "hierec/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "hierec/evaluation.h"
#include "hierec/interest_hierarchy.h"

namespace hierec {

void TrainConfig::Validate() const {
  if (negatives < 1) throw std::invalid_argument("train: K must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("train: dropout must be in [0, 1)");
  }
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning_rate must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw std::invalid_argument("train: bad Adam constants");
  }
  match.Validate();
}

double NceLoss(double o_pos, std::span<const double> o_negs) {
  if (o_negs.empty()) throw std::invalid_argument("NceLoss: K must be >= 1");
  double top = o_pos;
  if (!std::isfinite(o_pos)) throw std::domain_error("NceLoss: non-finite score");
  for (const double o : o_negs) {
    if (!std::isfinite(o)) throw std::domain_error("NceLoss: non-finite score");
    top = std::max(top, o);
  }
  double others = 0.0;
  for (const double o : o_negs) others += std::exp(o - top);
  // log1p keeps tiny losses of a dominant positive from rounding to zero.
  if (o_pos == top) return std::log1p(others);
  return std::log(std::exp(o_pos - top) + others) - (o_pos - top);
}

Var SampleLoss(Graph& g, const TrainingSample& sample, const Catalog& catalog,
               const ModelParams& params, const MatchConfig& match,
               const DropoutContext* dropout) {
  const InterestTreeVars tree = BuildInterestTreeGraph(
      g, *sample.index,
      [&](int n) { return EncodeNews(g, catalog[n], params, dropout); }, params);
  std::vector<Var> logits;
  logits.reserve(sample.negatives.size() + 1);
  auto score = [&](int n) {
    const NewsArticle& a = catalog[n];
    Var cand = EncodeNews(g, a, params, dropout);
    return ScoreCandidateGraph(g, cand, a.topic_id, a.subtopic_id, tree,
                               *sample.index, match);
  };
  logits.push_back(score(sample.positive));
  for (const int n : sample.negatives) logits.push_back(score(n));
  return g.SoftmaxCrossEntropy(g.StackRows(logits), 0);
}

double EvaluateSampleLoss(const TrainingSample& sample, const Catalog& catalog,
                          const ModelParams& params, const MatchConfig& match) {
  Graph g(/*record_gradients=*/false);
  return g.scalar(SampleLoss(g, sample, catalog, params, match, nullptr));
}

GradientBuffer::GradientBuffer(const ModelParams& params) {
  for (const Parameter* p : params.All()) {
    grads_.emplace(p, Matrix(p->value.rows(), p->value.cols()));
  }
}

void GradientBuffer::Accumulate(const Graph& g, Real scale) {
  g.ForEachParamGrad([&](const Parameter& p, const Matrix& grad) {
    Matrix& dst = grads_.at(&p);
    auto out = dst.data();
    auto in = grad.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += scale * in[i];
  });
  g.ForEachSparseGrad(
      [&](const Parameter& p, std::span<const int> rows, const Matrix& grad) {
        Matrix& dst = grads_.at(&p);
        for (size_t r = 0; r < rows.size(); ++r) {
          auto out = dst.row(rows[r]);
          auto in = grad.row(static_cast<int>(r));
          for (size_t c = 0; c < out.size(); ++c) out[c] += scale * in[c];
        }
      });
}

void GradientBuffer::SetZero() {
  for (auto& [p, m] : grads_) m.SetZero();
}

double GradientBuffer::GlobalNorm() const {
  double ss = 0.0;
  for (const auto& [p, m] : grads_) {
    for (const Real x : m.data()) ss += x * x;
  }
  return std::sqrt(ss);
}

void GradientBuffer::Scale(Real factor) {
  for (auto& [p, m] : grads_) {
    for (Real& x : m.data()) x *= factor;
  }
}

const Matrix& GradientBuffer::operator[](const Parameter& p) const {
  return grads_.at(&p);
}

AdamOptimizer::AdamOptimizer(const ModelParams& params, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      freeze_words_(config.freeze_word_embeddings) {
  for (const Parameter* p : params.All()) {
    const Matrix zero(p->value.rows(), p->value.cols());
    moments_.emplace(p->name, std::make_pair(zero, zero));
  }
}

void AdamOptimizer::Step(const GradientBuffer& grads, ModelParams* params) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, step_);
  const double c2 = 1.0 - std::pow(beta2_, step_);
  for (Parameter* p : params->All()) {
    if (!p->trainable) continue;
    if (freeze_words_ && p == &params->word_embeddings) continue;
    auto& [m, v] = moments_.at(p->name);
    auto value = p->value.data();
    auto g = grads[*p].data();
    auto md = m.data();
    auto vd = v.data();
    for (size_t i = 0; i < value.size(); ++i) {
      md[i] = beta1_ * md[i] + (1.0 - beta1_) * g[i];
      vd[i] = beta2_ * vd[i] + (1.0 - beta2_) * g[i] * g[i];
      value[i] -= lr_ * (md[i] / c1) / (std::sqrt(vd[i] / c2) + eps_);
    }
  }
}

nlohmann::json EpochLog::ToJson() const {
  nlohmann::json j = {{"epoch", epoch}, {"loss", mean_loss},
                      {"samples", samples}, {"seconds", seconds}};
  j["val_auc"] = std::isnan(val_auc) ? nlohmann::json(nullptr)
                                     : nlohmann::json(val_auc);
  return j;
}

nlohmann::json TrainReport::ToJson() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["best_val_auc"] = std::isnan(best_val_auc) ? nlohmann::json(nullptr)
                                               : nlohmann::json(best_val_auc);
  j["checkpoint"] = checkpoint.string();
  j["sampling"] = {{"impressions", sampling.impressions},
                   {"samples", sampling.samples},
                   {"skipped_no_positive", sampling.skipped_no_positive},
                   {"skipped_no_negative", sampling.skipped_no_negative}};
  nlohmann::json epochs_json = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  for (const EpochLog& e : epochs) {
    nlohmann::json row = e.ToJson();
    row.erase("seconds");
    epochs_json.push_back(row);
    timing.push_back(e.seconds);
  }
  j["epochs"] = epochs_json;
  j["timing"] = {{"epoch_seconds", timing}};
  return j;
}

TrainReport Train(const Catalog& catalog, std::span<const Impression> train,
                  std::span<const Impression> validation,
                  const TrainConfig& config, ModelParams* params,
                  const TrainOptions& options) {
  config.Validate();
  std::vector<std::shared_ptr<const InterestIndex>> indices;
  indices.reserve(train.size());
  for (const Impression& imp : train) {
    indices.push_back(std::make_shared<const InterestIndex>(
        BuildInterestIndex(imp.history, catalog)));
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    if (options.log_path.has_parent_path()) {
      std::filesystem::create_directories(options.log_path.parent_path());
    }
    log.open(options.log_path);
    if (!log) throw std::runtime_error("cannot write " + options.log_path.string());
  }

  TrainReport report;
  report.best_val_auc = std::numeric_limits<double>::quiet_NaN();
  ModelParams best = *params;
  GradientBuffer grads(*params);
  AdamOptimizer adam(*params, config);
  const int group = std::max(1, omp_get_max_threads());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    SamplingReport sampling;
    std::vector<TrainingSample> samples;
    for (size_t i = 0; i < train.size(); ++i) {
      std::vector<TrainingSample> s = SampleTrainingInstances(
          train[i], indices[i], catalog, config.negatives,
          DeriveSeed(config.seed, epoch, i), &sampling);
      std::move(s.begin(), s.end(), std::back_inserter(samples));
    }
    if (epoch == 1) report.sampling = sampling;
    if (samples.empty()) throw std::runtime_error("train: no usable samples");
    std::mt19937_64 shuffle_rng(DeriveSeed(config.seed, epoch, ~0ULL));
    std::shuffle(samples.begin(), samples.end(), shuffle_rng);

    double loss_sum = 0.0;
    const int n = static_cast<int>(samples.size());
    for (int b0 = 0; b0 < n; b0 += config.batch_size) {
      const int b1 = std::min(n, b0 + config.batch_size);
      const Real weight = 1.0 / static_cast<Real>(b1 - b0);
      grads.SetZero();
      // Graphs are built in parallel a group at a time and folded into the
      // buffer in sample order, so the sum does not depend on thread count.
      for (int g0 = b0; g0 < b1; g0 += group) {
        const int g1 = std::min(b1, g0 + group);
        std::vector<std::unique_ptr<Graph>> graphs(g1 - g0);
        std::vector<double> losses(g1 - g0, 0.0);
        std::vector<std::string> errors(g1 - g0);
#pragma omp parallel for schedule(static, 1)
        for (int s = g0; s < g1; ++s) {
          try {
            std::mt19937_64 rng(DeriveSeed(config.seed, epoch, n + s));
            DropoutContext dropout{config.dropout, &rng};
            auto g = std::make_unique<Graph>();
            Var loss = SampleLoss(*g, samples[s], catalog, *params, config.match,
                                  config.dropout > 0.0 ? &dropout : nullptr);
            g->Backward(loss, weight);
            losses[s - g0] = g->scalar(loss);
            graphs[s - g0] = std::move(g);
          } catch (const std::exception& e) {
            errors[s - g0] = e.what();
          }
        }
        for (int s = 0; s < g1 - g0; ++s) {
          if (!errors[s].empty() || !std::isfinite(losses[s])) {
            throw std::runtime_error(
                "train: loss diverged at epoch " + std::to_string(epoch) +
                ", step " + std::to_string(adam.steps() + 1) + ": " +
                (errors[s].empty() ? "non-finite loss" : errors[s]));
          }
          loss_sum += losses[s];
          grads.Accumulate(*graphs[s], 1.0);
        }
      }
      const double norm = grads.GlobalNorm();
      if (!std::isfinite(norm)) {
        throw std::runtime_error("train: non-finite gradient at epoch " +
                                 std::to_string(epoch));
      }
      if (config.clip_norm > 0.0 && norm > config.clip_norm) {
        grads.Scale(config.clip_norm / norm);
      }
      adam.Step(grads, params);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.samples = n;
    entry.mean_loss = loss_sum / n;
    entry.val_auc = std::numeric_limits<double>::quiet_NaN();
    if (!validation.empty()) {
      entry.val_auc =
          EvaluateRanking(catalog, validation, *params, config.match).auc;
    }
    entry.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start).count();
    const bool improved =
        validation.empty() || std::isnan(report.best_val_auc) ||
        entry.val_auc > report.best_val_auc;
    if (improved) {
      best = *params;
      report.best_epoch = epoch;
      report.best_val_auc = entry.val_auc;
    }
    spdlog::info("epoch {} loss {:.5f} val_auc {:.3f} ({:.1f}s)", epoch,
                 entry.mean_loss, entry.val_auc, entry.seconds);
    if (log.is_open()) log << entry.ToJson().dump() << '\n' << std::flush;
    if (options.on_epoch) options.on_epoch(entry);
    report.epochs.push_back(entry);
  }

  *params = best;
  if (!options.checkpoint_path.empty()) {
    SaveCheckpoint(*params, options.checkpoint_path, options.checkpoint_metadata);
    report.checkpoint = options.checkpoint_path;
  }
  return report;
}

nlohmann::json GradientCheckReport::ToJson() const {
  return {{"max_relative_error", max_relative_error},
          {"worst_parameter", worst_parameter},
          {"worst_index", worst_index},
          {"worst_analytic", worst_analytic},
          {"worst_numeric", worst_numeric},
          {"scalars_checked", scalars_checked},
          {"per_parameter", per_parameter}};
}

GradientCheckReport GradientCheck(const ModelParams& params,
                                  const TrainingSample& sample,
                                  const Catalog& catalog,
                                  const MatchConfig& match, double epsilon) {
  ModelParams probe = params;
  GradientBuffer analytic(probe);
  {
    Graph g;
    Var loss = SampleLoss(g, sample, catalog, probe, match, nullptr);
    g.Backward(loss);
    analytic.Accumulate(g, 1.0);
  }
  GradientCheckReport report;
  for (Parameter* p : probe.All()) {
    const Matrix& ga = analytic[*p];
    double worst = 0.0;
    auto values = p->value.data();
    for (size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = saved + epsilon;
      const double up = EvaluateSampleLoss(sample, catalog, probe, match);
      values[i] = saved - epsilon;
      const double down = EvaluateSampleLoss(sample, catalog, probe, match);
      values[i] = saved;
      const double gn = (up - down) / (2.0 * epsilon);
      const double a = ga.data()[i];
      const double err = std::fabs(a - gn) / (std::fabs(a) + std::fabs(gn) + 1e-12);
      ++report.scalars_checked;
      worst = std::max(worst, err);
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = err;
        report.worst_parameter = p->name;
        report.worst_index = static_cast<int>(i);
        report.worst_analytic = a;
        report.worst_numeric = gn;
      }
    }
    report.per_parameter[p->name] = worst;
  }
  return report;
}

}  // namespace hierec
