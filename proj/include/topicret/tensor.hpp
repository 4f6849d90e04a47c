// Copyright 2026 The topicret Authors.
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

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace topicret {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Four interleaved partial sums, combined in a fixed order.
inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= a.size(); i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < a.size(); ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// out = M * v
inline void matvec(const Matrix& m, std::span<const double> v,
                   std::span<double> out) {
  assert(v.size() == m.cols() && out.size() == m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
}

// out += M^T * v
inline void matvec_transposed_add(const Matrix& m, std::span<const double> v,
                                  std::span<double> out) {
  assert(v.size() == m.rows() && out.size() == m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += s * row[c];
  }
}

// M += a ⊗ b
inline void outer_add(Matrix& m, std::span<const double> a,
                      std::span<const double> b) {
  assert(a.size() == m.rows() && b.size() == m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = a[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += s * b[c];
  }
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Y = X * W^T for X (n×in), W (out×in).
inline void linear_rows(const Matrix& x, const Matrix& w, Matrix& y) {
  y = Matrix(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) matvec(w, x.row(i), y.row(i));
}

}  // namespace topicret
