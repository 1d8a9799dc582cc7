// Copyright 2026 The hdnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdnn/error.hpp"

namespace hdnn {

using Vector = std::vector<double>;

/// Dense row-major real64 matrix. Values are immutable by convention once a
/// public operation returns them; all shape mismatches are hard errors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vector row_vector(std::size_t r) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline void check_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string(what) + ": non-finite value");
    }
  }
}

inline void check_finite(const Matrix& m, const char* what) {
  check_finite(std::span<const double>(m.data()), what);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        c(i, j) += aik * b(k, j);
      }
    }
  }
  check_finite(c, "matmul");
  return c;
}

/// Rows of the inputs concatenated in argument order; all must agree on cols.
inline Matrix vstack(std::span<const Matrix> mats) {
  if (mats.empty()) throw ArgumentError("vstack: empty input list");
  const std::size_t cols = mats.front().cols();
  std::size_t rows = 0;
  for (const Matrix& m : mats) {
    if (m.cols() != cols) {
      throw ShapeError("vstack: col mismatch " + std::to_string(m.cols()) +
                       " vs " + std::to_string(cols));
    }
    rows += m.rows();
  }
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const Matrix& m : mats) {
    std::copy(m.data().begin(), m.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
    r += m.rows();
  }
  return out;
}

inline Matrix vstack(std::initializer_list<Matrix> mats) {
  std::vector<Matrix> v(mats);
  return vstack(std::span<const Matrix>(v));
}

/// Columns concatenated in argument order; all must agree on rows.
inline Matrix hstack(std::span<const Matrix> mats) {
  if (mats.empty()) throw ArgumentError("hstack: empty input list");
  const std::size_t rows = mats.front().rows();
  std::size_t cols = 0;
  for (const Matrix& m : mats) {
    if (m.rows() != rows) {
      throw ShapeError("hstack: row mismatch " + std::to_string(m.rows()) +
                       " vs " + std::to_string(rows));
    }
    cols += m.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t c = 0;
    for (const Matrix& m : mats) {
      for (std::size_t j = 0; j < m.cols(); ++j) out(i, c + j) = m(i, j);
      c += m.cols();
    }
  }
  return out;
}

/// y = x * M with x a row vector of length M.rows().
inline Vector vecmat(const Vector& x, const Matrix& m) {
  if (x.size() != m.rows()) {
    throw ShapeError("vecmat: len " + std::to_string(x.size()) + " vs rows " +
                     std::to_string(m.rows()));
  }
  Vector y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += xi * r[j];
  }
  return y;
}

/// y = M * x with x a column vector of length M.cols().
inline Vector matvec(const Matrix& m, const Vector& x) {
  if (x.size() != m.cols()) {
    throw ShapeError("matvec: len " + std::to_string(x.size()) + " vs cols " +
                     std::to_string(m.cols()));
  }
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

/// Outer product u v^T, |u| x |v|.
inline Matrix outer(const Vector& u, const Vector& v) {
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = ui * v[j];
  }
  return m;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vector& v, double alpha) {
  for (double& x : v) x *= alpha;
}

inline double sigmoid(double x) {
  // Branch keeps exp() argument non-positive; safe for any finite x.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

inline Vector softmax(const Vector& v) {
  if (v.empty()) throw ArgumentError("softmax: empty input");
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  Vector out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

inline Vector log_softmax(const Vector& v) {
  if (v.empty()) throw ArgumentError("log_softmax: empty input");
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double z = 0.0;
  for (double x : v) z += std::exp(x - m);
  const double lz = m + std::log(z);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lz;
  return out;
}

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace hdnn
