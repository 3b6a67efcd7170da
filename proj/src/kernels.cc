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

#include "hierec/kernels.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

namespace hierec::kernels {
namespace {

constexpr long kParallelThreshold = 1L << 16;

struct GemmShape {
  int m, k, n;
};

GemmShape ShapeOf(Transpose ta, Transpose tb, const Matrix& a,
                  const Matrix& b) {
  const int m = ta == Transpose::kNo ? a.rows() : a.cols();
  const int k = ta == Transpose::kNo ? a.cols() : a.rows();
  const int kb = tb == Transpose::kNo ? b.rows() : b.cols();
  const int n = tb == Transpose::kNo ? b.cols() : b.rows();
  assert(k == kb);
  (void)kb;
  return {m, k, n};
}

void PrepareOutput(const GemmShape& s, Matrix* c, bool accumulate) {
  if (!accumulate) {
    *c = Matrix(s.m, s.n);
  } else {
    assert(c->rows() == s.m && c->cols() == s.n);
  }
}

// One output row of op(a) * op(b). The k-loop order is fixed so that the
// serial and parallel kernels produce identical bits.
inline void GemmRow(Transpose ta, Transpose tb, const Matrix& a,
                    const Matrix& b, const GemmShape& s, int i, Matrix* c) {
  std::span<Real> out = c->row(i);
  if (tb == Transpose::kNo) {
    for (int p = 0; p < s.k; ++p) {
      const Real av = ta == Transpose::kNo ? a(i, p) : a(p, i);
      if (av == 0.0) continue;
      std::span<const Real> brow = b.row(p);
      for (int j = 0; j < s.n; ++j) out[j] += av * brow[j];
    }
  } else {
    for (int j = 0; j < s.n; ++j) {
      std::span<const Real> brow = b.row(j);
      Real acc = 0.0;
      if (ta == Transpose::kNo) {
        std::span<const Real> arow = a.row(i);
        for (int p = 0; p < s.k; ++p) acc += arow[p] * brow[p];
      } else {
        for (int p = 0; p < s.k; ++p) acc += a(p, i) * brow[p];
      }
      out[j] += acc;
    }
  }
}

inline Real CosineDistance(std::span<const Real> a, Real norm_a,
                           std::span<const Real> b, Real norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 1.0;
  return 1.0 - Dot(a, b) / (norm_a * norm_b);
}

std::vector<Real> RowNorms(const Matrix& rows) {
  std::vector<Real> norms(rows.rows());
  for (int i = 0; i < rows.rows(); ++i) {
    norms[i] = std::sqrt(Dot(rows.row(i), rows.row(i)));
  }
  return norms;
}

}  // namespace

namespace serial {

void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate) {
  const GemmShape s = ShapeOf(ta, tb, a, b);
  PrepareOutput(s, c, accumulate);
  for (int i = 0; i < s.m; ++i) GemmRow(ta, tb, a, b, s, i, c);
}

void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out) {
  assert(static_cast<int>(out.size()) == items.rows());
  for (int i = 0; i < items.rows(); ++i) out[i] = Dot(items.row(i), query);
}

Real MeanPairwiseCosineDistance(const Matrix& rows) {
  const int n = rows.rows();
  if (n < 2) return std::numeric_limits<Real>::quiet_NaN();
  const std::vector<Real> norms = RowNorms(rows);
  // Row-wise partial sums, so the parallel version can match bitwise.
  Real total = 0.0;
  for (int i = 0; i < n; ++i) {
    Real acc = 0.0;
    for (int j = i + 1; j < n; ++j) {
      acc += CosineDistance(rows.row(i), norms[i], rows.row(j), norms[j]);
    }
    total += acc;
  }
  return total / (0.5 * n * (n - 1));
}

}  // namespace serial

namespace parallel {

void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate) {
  const GemmShape s = ShapeOf(ta, tb, a, b);
  PrepareOutput(s, c, accumulate);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.m; ++i) GemmRow(ta, tb, a, b, s, i, c);
}

void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out) {
  assert(static_cast<int>(out.size()) == items.rows());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < items.rows(); ++i) out[i] = Dot(items.row(i), query);
}

Real MeanPairwiseCosineDistance(const Matrix& rows) {
  const int n = rows.rows();
  if (n < 2) return std::numeric_limits<Real>::quiet_NaN();
  const std::vector<Real> norms = RowNorms(rows);
  // Per-row partial sums, combined serially in row order for determinism.
  std::vector<Real> partial(n, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    Real acc = 0.0;
    for (int j = i + 1; j < n; ++j) {
      acc += CosineDistance(rows.row(i), norms[i], rows.row(j), norms[j]);
    }
    partial[i] = acc;
  }
  const Real total = std::accumulate(partial.begin(), partial.end(), 0.0);
  return total / (0.5 * n * (n - 1));
}

}  // namespace parallel

void Gemm(Transpose ta, Transpose tb, const Matrix& a, const Matrix& b,
          Matrix* c, bool accumulate) {
  const GemmShape s = ShapeOf(ta, tb, a, b);
  const long work = static_cast<long>(s.m) * s.k * s.n;
  if (work >= kParallelThreshold && s.m > 1) {
    parallel::Gemm(ta, tb, a, b, c, accumulate);
  } else {
    serial::Gemm(ta, tb, a, b, c, accumulate);
  }
}

void RowDots(const Matrix& items, std::span<const Real> query,
             std::span<Real> out) {
  const long work = static_cast<long>(items.rows()) * items.cols();
  if (work >= kParallelThreshold) {
    parallel::RowDots(items, query, out);
  } else {
    serial::RowDots(items, query, out);
  }
}

std::vector<Real> PrefixMeanCosineDistance(const Matrix& rows,
                                           std::span<const int> prefix_sizes) {
  // For unit vectors u_i (zero rows contribute u_i = 0):
  //   sum_{i<j} cos_ij = (|sum u|^2 - #nonzero) / 2.
  std::vector<Real> out;
  out.reserve(prefix_sizes.size());
  Vector unit_sum(rows.cols(), 0.0);
  int nonzero = 0;
  int consumed = 0;
  for (const int size : prefix_sizes) {
    assert(size >= consumed && size <= rows.rows());
    for (; consumed < size; ++consumed) {
      std::span<const Real> r = rows.row(consumed);
      const Real norm = std::sqrt(Dot(r, r));
      if (norm == 0.0) continue;
      ++nonzero;
      for (int d = 0; d < rows.cols(); ++d) unit_sum[d] += r[d] / norm;
    }
    if (size < 2) {
      out.push_back(std::numeric_limits<Real>::quiet_NaN());
      continue;
    }
    const Real pairs = 0.5 * size * (size - 1);
    const Real cos_sum = 0.5 * (Dot(unit_sum, unit_sum) - nonzero);
    out.push_back((pairs - cos_sum) / pairs);
  }
  return out;
}

std::vector<int> TopK(std::span<const Real> scores, int k) {
  const int n = static_cast<int>(scores.size());
  k = std::clamp(k, 0, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
  order.resize(k);
  return order;
}

}  // namespace hierec::kernels
