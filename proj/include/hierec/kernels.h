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

// Data-parallel numeric kernels.
//
// Every kernel exists twice: `serial::` is the straightforward reference kept
// for tests and benchmarks, `parallel::` splits the outer loop with OpenMP.
// Each output element is accumulated in the same order in both versions, so
// the two agree bitwise; callers may switch freely without affecting
// determinism. The unqualified `kernels::` entry points pick the parallel
// version once the work is large enough to amortize a thread team.

#ifndef HIEREC_KERNELS_H_
#define HIEREC_KERNELS_H_

#include <span>
#include <vector>

#include "hierec/tensor.h"

namespace hierec::kernels {

enum class Transpose { kNo, kYes };

namespace serial {

// c (+)= op(a) * op(b). When `accumulate` is false, c is resized and
// overwritten; otherwise c must already have the result shape.
void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate);

// out[i] = items.row(i) . query
void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out);

// Mean over unordered pairs of (1 - cos(a, b)). Zero rows have cosine 0 with
// everything. O(n^2 d) enumeration.
Real MeanPairwiseCosineDistance(const Matrix& rows);

}  // namespace serial

namespace parallel {

void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate);
void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out);
Real MeanPairwiseCosineDistance(const Matrix& rows);

}  // namespace parallel

void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate);
void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out);

// Mean pairwise cosine distance of every prefix of `rows` whose length is in
// `prefix_sizes` (ascending). Uses the running sum of unit vectors, so the
// whole curve costs O(n d) instead of O(n^2 d) per prefix. Prefixes shorter
// than 2 yield NaN.
std::vector<Real> PrefixMeanCosineDistance(const Matrix& rows,
                                           std::span<const int> prefix_sizes);

// Indices of the k largest entries of `scores`, descending; ties keep the
// lower index first.
std::vector<int> TopK(std::span<const Real> scores, int k);

}  // namespace hierec::kernels

#endif  // HIEREC_KERNELS_H_
