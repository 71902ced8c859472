// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "convbeam/error.hpp"

namespace convbeam {

using Complex = std::complex<double>;

/// Default relative diagonal loading applied before every Hermitian solve.
inline constexpr double kDefaultLoading = 1e-7;

class ComplexVector {
 public:
  ComplexVector() = default;
  explicit ComplexVector(std::size_t len) : data_(len) {}
  ComplexVector(std::initializer_list<Complex> init) : data_(init) {}
  explicit ComplexVector(std::vector<Complex> data) : data_(std::move(data)) {}

  std::size_t size() const noexcept { return data_.size(); }
  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }

  std::span<Complex> span() noexcept { return data_; }
  std::span<const Complex> span() const noexcept { return data_; }
  const std::vector<Complex>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  double norm() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += std::norm(v);
    return std::sqrt(acc);
  }

 private:
  std::vector<Complex> data_;
};

/// Dense complex matrix, row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> init) {
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_)
        throw Error(ErrorCode::kDimensionMismatch, "ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static ComplexMatrix Identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  ComplexVector column(std::size_t c) const {
    ComplexVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_)
      throw Error(ErrorCode::kDimensionMismatch, "matrix sum");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  ComplexMatrix& operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  double frobenius_norm() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += std::norm(v);
    return std::sqrt(acc);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

inline ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
  a += b;
  return a;
}

inline ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::kDimensionMismatch, "matrix difference");
  auto lhs = a.data();
  auto rhs = b.data();
  for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] -= rhs[i];
  return a;
}

inline ComplexMatrix operator*(Complex s, ComplexMatrix a) {
  a *= s;
  return a;
}

inline ComplexMatrix conj_transpose(const ComplexMatrix& a) {
  ComplexMatrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = std::conj(a(r, c));
  return out;
}

inline Complex trace(const ComplexMatrix& a) {
  if (!a.square()) throw Error(ErrorCode::kDimensionMismatch, "trace of non-square matrix");
  Complex acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

/// x yᴴ
inline ComplexMatrix outer(const ComplexVector& x, const ComplexVector& y) {
  ComplexMatrix out(x.size(), y.size());
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t c = 0; c < y.size(); ++c) out(r, c) = x[r] * std::conj(y[c]);
  return out;
}

inline ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x) {
  if (a.cols() != x.size()) throw Error(ErrorCode::kDimensionMismatch, "matvec");
  ComplexVector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Complex acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::kDimensionMismatch, "matmul");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex lhs = a(r, k);
      if (lhs == Complex{}) continue;
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += lhs * b(k, c);
    }
  }
  return out;
}

/// xᴴ y
inline Complex dot(const ComplexVector& x, const ComplexVector& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "dot");
  Complex acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

/// (A + Aᴴ) / 2, in place.
inline void hermitian_symmetrize(ComplexMatrix& a) {
  if (!a.square()) throw Error(ErrorCode::kDimensionMismatch, "symmetrize non-square");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    a(r, r) = a(r, r).real();
    for (std::size_t c = r + 1; c < a.cols(); ++c) {
      const Complex avg = 0.5 * (a(r, c) + std::conj(a(c, r)));
      a(r, c) = avg;
      a(c, r) = std::conj(avg);
    }
  }
}

/// Solves (A + loading * (Re tr(A) / N) * I) X = B through a Cholesky
/// factorization. Only the lower triangle of A is read. A zero matrix is
/// loaded with an absolute `loading * I` so that the loading stays defined.
inline ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                                     double loading = kDefaultLoading) {
  if (!a.square()) throw Error(ErrorCode::kDimensionMismatch, "hermitian_solve: A not square");
  if (b.rows() != a.rows())
    throw Error(ErrorCode::kDimensionMismatch, "hermitian_solve: B rows != A rows");
  if (loading < 0.0) throw Error(ErrorCode::kInvalidParam, "negative diagonal loading");
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();

  double scale = trace(a).real() / static_cast<double>(n);
  if (!(scale > 0.0)) scale = 1.0;
  const double load = loading * scale;

  // Lower Cholesky factor L with L Lᴴ = A + load I.
  ComplexMatrix l(n, n);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i).real() + load);
  const double pivot_floor = max_diag * 1e-14;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j).real() + load;
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!std::isfinite(d) || d <= pivot_floor)
      throw Error(ErrorCode::kSingularMatrix,
                  "non-positive pivot " + std::to_string(d) + " at column " + std::to_string(j));
    const double djj = std::sqrt(d);
    l(j, j) = djj;
    for (std::size_t i = j + 1; i < n; ++i) {
      Complex s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / djj;
    }
  }

  ComplexMatrix x = b;
  for (std::size_t col = 0; col < m; ++col) {
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
      Complex s = x(i, col);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i).real();
    }
    // Lᴴ x = y
    for (std::size_t ii = n; ii-- > 0;) {
      Complex s = x(ii, col);
      for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, col);
      x(ii, col) = s / l(ii, ii).real();
    }
  }
  for (const auto& v : x.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorCode::kSingularMatrix, "non-finite solution");
  return x;
}

inline ComplexVector hermitian_solve(const ComplexMatrix& a, const ComplexVector& b,
                                     double loading = kDefaultLoading) {
  ComplexMatrix rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  return hermitian_solve(a, rhs, loading).column(0);
}

}  // namespace convbeam
