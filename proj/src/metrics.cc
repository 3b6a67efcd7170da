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

#include "hierec/metrics.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "hierec/kernels.h"

namespace hierec {

std::vector<int> RankOrder(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

std::optional<double> Auc(std::span<const int> labels,
                          std::span<const double> scores, bool tie_half) {
  assert(labels.size() == scores.size());
  // Sort once and count, per positive, the negatives strictly below it.
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  double n_pos = 0.0;
  double n_neg = 0.0;
  double correct = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double tie_pos = 0.0;
    double tie_neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tie_pos : tie_neg) += 1.0;
      ++j;
    }
    correct += tie_pos * n_neg;
    if (tie_half) correct += 0.5 * tie_pos * tie_neg;
    n_pos += tie_pos;
    n_neg += tie_neg;
    i = j;
  }
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  return correct / (n_pos * n_neg);
}

std::optional<double> Mrr(std::span<const int> labels,
                          std::span<const double> scores) {
  const std::vector<int> order = RankOrder(scores);
  double total = 0.0;
  int positives = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      total += 1.0 / static_cast<double>(rank + 1);
      ++positives;
    }
  }
  if (positives == 0) return std::nullopt;
  return total / positives;
}

std::optional<double> NdcgAtK(std::span<const int> labels,
                              std::span<const double> scores, int k) {
  const std::vector<int> order = RankOrder(scores);
  const int positives =
      static_cast<int>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) return std::nullopt;
  double dcg = 0.0;
  const int depth = std::min<int>(k, static_cast<int>(order.size()));
  for (int i = 1; i <= depth; ++i) {
    const int y = labels[order[i - 1]];
    dcg += (std::pow(2.0, y) - 1.0) / std::log2(1.0 + i);
  }
  double normalizer = 0.0;
  for (int i = 1; i <= positives; ++i) normalizer += 1.0 / std::log2(1.0 + i);
  return dcg / normalizer;
}

std::optional<double> RecallRate(std::span<const int> recalled,
                                 std::span<const int> clicked) {
  const std::unordered_set<int> clicked_set(clicked.begin(), clicked.end());
  if (clicked_set.empty()) return std::nullopt;
  const std::unordered_set<int> recalled_set(recalled.begin(), recalled.end());
  int hits = 0;
  for (const int c : clicked_set) hits += recalled_set.contains(c) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(clicked_set.size());
}

std::optional<double> Ilad(const Matrix& vectors) {
  if (vectors.rows() < 2) return std::nullopt;
  return kernels::serial::MeanPairwiseCosineDistance(vectors);
}

PairedTTest PairedT(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("PairedT: need two equal samples of size >= 2");
  }
  const int n = static_cast<int>(a.size());
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  PairedTTest out;
  out.mean_difference = mean;
  out.n = n;
  if (sd == 0.0) {
    out.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    out.p_value = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(n - 1);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

}  // namespace hierec
