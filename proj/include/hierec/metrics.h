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

// Per-impression ranking metrics and recall/diversity measures.
//
// Rankings sort by descending score and keep the input order among ties.

#ifndef HIEREC_METRICS_H_
#define HIEREC_METRICS_H_

#include <optional>
#include <span>
#include <vector>

#include "hierec/tensor.h"

namespace hierec {

// Candidate positions in ranked order.
std::vector<int> RankOrder(std::span<const double> scores);

// Fraction of (positive, negative) pairs with score_p > score_n. Ties count 0,
// or 0.5 with `tie_half`. nullopt unless both classes are present.
std::optional<double> Auc(std::span<const int> labels,
                          std::span<const double> scores, bool tie_half = false);

// Mean of 1/rank over positives. nullopt without positives.
std::optional<double> Mrr(std::span<const int> labels,
                          std::span<const double> scores);

// sum_{i<=k} (2^{y_i} - 1) / log2(1 + i) divided by
// sum_{i<=|positives|} 1 / log2(1 + i). The normalizer runs over all
// positives, not min(k, |positives|). nullopt without positives.
std::optional<double> NdcgAtK(std::span<const int> labels,
                              std::span<const double> scores, int k);

// |recalled & clicked| / |clicked|; nullopt if clicked is empty. Inputs are
// id lists (duplicates ignored).
std::optional<double> RecallRate(std::span<const int> recalled,
                                 std::span<const int> clicked);

// Mean pairwise (1 - cosine) over the rows; zero rows have cosine 0 with
// everything. nullopt for fewer than two rows.
std::optional<double> Ilad(const Matrix& vectors);

struct PairedTTest {
  double mean_difference = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // two-sided
  int n = 0;
};

// Paired Student t-test on a - b. Requires equal sizes and n >= 2.
PairedTTest PairedT(std::span<const double> a, std::span<const double> b);

}  // namespace hierec

#endif  // HIEREC_METRICS_H_
