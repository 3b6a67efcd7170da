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

#include "hierec/evaluation.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "hierec/kernels.h"
#include "hierec/metrics.h"
#include "hierec/news_encoder.h"

namespace hierec {
namespace {

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Matrix GatherRows(const Matrix& source, std::span<const int> rows) {
  Matrix out(static_cast<int>(rows.size()), source.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(source.row(rows[i]).begin(), source.row(rows[i]).end(),
              out.row(static_cast<int>(i)).begin());
  }
  return out;
}

std::vector<int> RankPool(const Matrix& pool, std::span<const Real> query,
                          int k) {
  std::vector<Real> scores(pool.rows());
  kernels::serial::RowDots(pool, query, scores);
  return kernels::TopK(scores, k);
}

}  // namespace

nlohmann::json MetricsReport::ToJson(bool per_impression) const {
  nlohmann::json j = {{"auc", auc},
                      {"mrr", mrr},
                      {"ndcg5", ndcg5},
                      {"ndcg10", ndcg10},
                      {"n_impressions", n_impressions},
                      {"n_excluded", n_excluded},
                      {"ndcg5_unreachable", ndcg5_unreachable},
                      {"ndcg10_unreachable", ndcg10_unreachable}};
  if (per_impression) {
    j["per_impression"] = {{"auc", auc_values},
                           {"mrr", mrr_values},
                           {"ndcg5", ndcg5_values},
                           {"ndcg10", ndcg10_values}};
  }
  return j;
}

MetricsReport ComputeMetrics(std::span<const ImpressionScores> impressions,
                             bool tie_half) {
  MetricsReport r;
  for (const ImpressionScores& imp : impressions) {
    const std::optional<double> auc = Auc(imp.labels, imp.scores, tie_half);
    if (!auc) {
      ++r.n_excluded;
      continue;
    }
    const int positives = static_cast<int>(
        std::count(imp.labels.begin(), imp.labels.end(), 1));
    r.auc_values.push_back(*auc);
    r.mrr_values.push_back(*Mrr(imp.labels, imp.scores));
    r.ndcg5_values.push_back(*NdcgAtK(imp.labels, imp.scores, 5));
    r.ndcg10_values.push_back(*NdcgAtK(imp.labels, imp.scores, 10));
    if (positives > 5) ++r.ndcg5_unreachable;
    if (positives > 10) ++r.ndcg10_unreachable;
  }
  r.n_impressions = static_cast<int>(r.auc_values.size());
  r.auc = 100.0 * Mean(r.auc_values);
  r.mrr = 100.0 * Mean(r.mrr_values);
  r.ndcg5 = 100.0 * Mean(r.ndcg5_values);
  r.ndcg10 = 100.0 * Mean(r.ndcg10_values);
  return r;
}

EvaluationCache BuildEvaluationCache(const Catalog& catalog,
                                     std::span<const Impression> impressions,
                                     const ModelParams& params) {
  return BuildEvaluationCache(catalog, EncodeCatalog(catalog, params),
                              impressions, params);
}

EvaluationCache BuildEvaluationCache(const Catalog& catalog,
                                     const Matrix& news_vectors,
                                     std::span<const Impression> impressions,
                                     const ModelParams& params) {
  EvaluationCache cache;
  const int n = static_cast<int>(impressions.size());
  cache.impressions.resize(n);
  std::vector<int> missing(n, 0);
  // The breakdown's combined score uses the defaults; Rescore recomputes it.
  const MatchConfig defaults;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    const Impression& imp = impressions[i];
    const InterestIndex index = BuildInterestIndex(imp.history, catalog);
    const InterestTree tree =
        BuildInterestTreeFromVectors(index, news_vectors, params);
    CachedImpression& out = cache.impressions[i];
    for (const Candidate& c : imp.candidates) {
      const std::optional<int> idx = catalog.Find(c.news_id);
      if (!idx) {
        ++missing[i];
        continue;
      }
      const NewsArticle& a = catalog[*idx];
      out.labels.push_back(c.label);
      out.breakdowns.push_back(ScoreCandidateVector(
          news_vectors.row(*idx), a.topic_id, a.subtopic_id, tree, index,
          defaults));
    }
  }
  for (const int m : missing) cache.missing_candidates += m;
  return cache;
}

std::vector<ImpressionScores> Rescore(const EvaluationCache& cache,
                                      const MatchConfig& config) {
  config.Validate();
  std::vector<ImpressionScores> out(cache.impressions.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const CachedImpression& imp = cache.impressions[i];
    out[i].labels = imp.labels;
    out[i].scores.reserve(imp.breakdowns.size());
    for (const ScoreBreakdown& b : imp.breakdowns) {
      out[i].scores.push_back(CombineScores(b.o_s, b.o_t, b.o_g, config));
    }
  }
  return out;
}

MetricsReport EvaluateRanking(const Catalog& catalog,
                              std::span<const Impression> impressions,
                              const ModelParams& params,
                              const MatchConfig& config, bool tie_half) {
  const EvaluationCache cache = BuildEvaluationCache(catalog, impressions, params);
  const std::vector<ImpressionScores> scored = Rescore(cache, config);
  return ComputeMetrics(scored, tie_half);
}

std::vector<int> MergeChannels(std::span<const std::vector<int>> rankings,
                               int k) {
  std::vector<int> out;
  std::unordered_set<int> taken;
  std::vector<size_t> cursor(rankings.size(), 0);
  bool progressed = true;
  while (static_cast<int>(out.size()) < k && progressed) {
    progressed = false;
    for (size_t c = 0; c < rankings.size(); ++c) {
      if (static_cast<int>(out.size()) >= k) break;
      const std::vector<int>& r = rankings[c];
      while (cursor[c] < r.size() && taken.contains(r[cursor[c]])) ++cursor[c];
      if (cursor[c] == r.size()) continue;
      const int item = r[cursor[c]++];
      taken.insert(item);
      out.push_back(item);
      progressed = true;
    }
  }
  return out;
}

std::vector<int> MultiChannelRecall(const InterestTree& tree,
                                    const InterestIndex& index,
                                    const Matrix& pool, int k,
                                    bool* truncated) {
  if (index.num_subtopics() == 0) {
    return SingleChannelRecall(tree, pool, k, truncated);
  }
  if (truncated != nullptr) *truncated = pool.rows() < k;
  const int depth = std::min(k, pool.rows());
  // A channel never consumes more than k of its own ranking: every item it
  // passes over is already among the (at most k) merged results.
  std::vector<std::vector<int>> rankings;
  for (const TopicGroup& t : index.topics) {
    for (const SubtopicGroup& s : t.subtopics) {
      rankings.push_back(RankPool(pool, tree.subtopic_reps.at(s.subtopic_id),
                                  depth));
    }
  }
  return MergeChannels(rankings, depth);
}

std::vector<int> SingleChannelRecall(const InterestTree& tree,
                                     const Matrix& pool, int k,
                                     bool* truncated) {
  if (truncated != nullptr) *truncated = pool.rows() < k;
  const int depth = std::min(k, pool.rows());
  if (tree.cold_start || tree.user.empty()) {
    const Vector zero(pool.cols(), 0.0);
    return RankPool(pool, zero, depth);
  }
  return RankPool(pool, tree.user, depth);
}

void RecallConfig::Validate() const {
  if (ks.empty()) throw std::invalid_argument("recall: empty K list");
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1])) {
      throw std::invalid_argument("recall: K list must be positive and increasing");
    }
  }
  if (max_impressions < 0) throw std::invalid_argument("recall: max_impressions < 0");
}

nlohmann::json RecallReport::ToJson() const {
  return {{"ks", ks},
          {"multi_channel", {{"recall", multi_recall}, {"ilad", multi_ilad}}},
          {"single_channel", {{"recall", single_recall}, {"ilad", single_ilad}}},
          {"mean_channels", mean_channels},
          {"n_impressions", n_impressions},
          {"n_truncated", n_truncated}};
}

std::string RecallReport::ToCsv() const {
  std::ostringstream out;
  out << "k,multi_recall,single_recall,multi_ilad,single_ilad\n";
  for (size_t i = 0; i < ks.size(); ++i) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", ks[i],
                       multi_recall[i], single_recall[i], multi_ilad[i],
                       single_ilad[i]);
  }
  return out.str();
}

RecallReport EvaluateRecall(const Catalog& catalog,
                            std::span<const Impression> impressions,
                            const ModelParams& params,
                            const RecallConfig& config) {
  config.Validate();
  const Matrix news_vectors = EncodeCatalog(catalog, params);
  const int max_k = config.ks.back();
  const size_t num_k = config.ks.size();

  std::vector<const Impression*> selected;
  for (const Impression& imp : impressions) {
    if (config.max_impressions > 0 &&
        static_cast<int>(selected.size()) >= config.max_impressions) {
      break;
    }
    if (imp.HasPositive()) selected.push_back(&imp);
  }

  struct Slot {
    bool used = false;
    bool truncated = false;
    int channels = 0;
    std::vector<double> multi_recall, single_recall, multi_ilad, single_ilad;
  };
  const int n = static_cast<int>(selected.size());
  std::vector<Slot> slots(n);

#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    const Impression& imp = *selected[i];
    std::vector<int> clicked;
    std::vector<int> pool_rows;
    for (const Candidate& c : imp.candidates) {
      const std::optional<int> idx = catalog.Find(c.news_id);
      if (!idx) continue;
      if (c.label == 1) clicked.push_back(*idx);
      pool_rows.push_back(*idx);
    }
    if (clicked.empty()) continue;
    if (!config.impression_pool) {
      pool_rows.resize(catalog.size());
      for (int r = 0; r < catalog.size(); ++r) pool_rows[r] = r;
    }
    Matrix gathered;
    const Matrix* pool = &news_vectors;
    if (config.impression_pool) {
      gathered = GatherRows(news_vectors, pool_rows);
      pool = &gathered;
    }
    const InterestIndex index = BuildInterestIndex(imp.history, catalog);
    const InterestTree tree =
        BuildInterestTreeFromVectors(index, news_vectors, params);

    Slot& slot = slots[i];
    slot.used = true;
    slot.channels = std::max(1, index.num_subtopics());
    bool truncated = false;
    const std::vector<int> multi =
        MultiChannelRecall(tree, index, *pool, max_k, &truncated);
    const std::vector<int> single = SingleChannelRecall(tree, *pool, max_k);
    slot.truncated = truncated;

    auto curve = [&](const std::vector<int>& recalled,
                     std::vector<double>* recall, std::vector<double>* ilad) {
      std::vector<int> ids(recalled.size());
      for (size_t j = 0; j < recalled.size(); ++j) ids[j] = pool_rows[recalled[j]];
      std::vector<int> sizes(num_k);
      for (size_t j = 0; j < num_k; ++j) {
        sizes[j] = std::min<int>(config.ks[j], static_cast<int>(ids.size()));
      }
      const std::vector<Real> dist = kernels::PrefixMeanCosineDistance(
          GatherRows(news_vectors, ids), sizes);
      for (size_t j = 0; j < num_k; ++j) {
        recall->push_back(*RecallRate(
            std::span<const int>(ids.data(), sizes[j]), clicked));
        ilad->push_back(dist[j]);
      }
    };
    curve(multi, &slot.multi_recall, &slot.multi_ilad);
    curve(single, &slot.single_recall, &slot.single_ilad);
  }

  RecallReport report;
  report.ks = config.ks;
  report.multi_recall.assign(num_k, 0.0);
  report.single_recall.assign(num_k, 0.0);
  report.multi_ilad.assign(num_k, 0.0);
  report.single_ilad.assign(num_k, 0.0);
  std::vector<int> ilad_counts_multi(num_k, 0);
  std::vector<int> ilad_counts_single(num_k, 0);
  double channels = 0.0;
  for (const Slot& s : slots) {
    if (!s.used) continue;
    ++report.n_impressions;
    report.n_truncated += s.truncated ? 1 : 0;
    channels += s.channels;
    for (size_t j = 0; j < num_k; ++j) {
      report.multi_recall[j] += s.multi_recall[j];
      report.single_recall[j] += s.single_recall[j];
      if (!std::isnan(s.multi_ilad[j])) {
        report.multi_ilad[j] += s.multi_ilad[j];
        ++ilad_counts_multi[j];
      }
      if (!std::isnan(s.single_ilad[j])) {
        report.single_ilad[j] += s.single_ilad[j];
        ++ilad_counts_single[j];
      }
    }
  }
  if (report.n_impressions > 0) {
    const double n_imp = report.n_impressions;
    report.mean_channels = channels / n_imp;
    for (size_t j = 0; j < num_k; ++j) {
      report.multi_recall[j] *= 100.0 / n_imp;
      report.single_recall[j] *= 100.0 / n_imp;
      if (ilad_counts_multi[j] > 0) report.multi_ilad[j] /= ilad_counts_multi[j];
      if (ilad_counts_single[j] > 0) {
        report.single_ilad[j] /= ilad_counts_single[j];
      }
    }
  }
  return report;
}

}  // namespace hierec
