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

#ifndef HIEREC_TENSOR_H_
#define HIEREC_TENSOR_H_

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace hierec {

using Real = double;
using Vector = std::vector<Real>;

// Dense row-major matrix. Vectors flowing through the model are 1 x n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, Real fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {
    assert(rows >= 0 && cols >= 0);
  }

  static Matrix FromRow(std::span<const Real> values) {
    Matrix m(1, static_cast<int>(values.size()));
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
  }

  static Matrix FromRows(const std::vector<Vector>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows_; ++r) {
      assert(static_cast<int>(rows[r].size()) == m.cols_);
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(int r, int c) {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  Real operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  std::span<Real> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::span<const Real> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  Vector RowVector(int r) const {
    auto s = row(r);
    return Vector(s.begin(), s.end());
  }

  void SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }
  bool SameShape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Real> data_;
};

inline Real Dot(std::span<const Real> a, std::span<const Real> b) {
  assert(a.size() == b.size());
  Real s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace hierec

#endif  // HIEREC_TENSOR_H_
