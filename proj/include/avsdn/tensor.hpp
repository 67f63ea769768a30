// Copyright 2026 The AVSDN Authors. All Rights Reserved.
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

// Dense vectors, row-major matrices and the forward/backward kernels the
// recurrent layers are built from. Every kernel is instantiated for float
// (standard precision) and double (checking precision).

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace avsdn {

enum class Precision { standard, checking };

const char* to_string(Precision p);
Precision parse_precision(const std::string& text);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Real>
class Vector {
 public:
  using value_type = Real;

  Vector() = default;
  explicit Vector(std::size_t n, Real fill = Real(0)) : data_(n, fill) {}
  Vector(std::initializer_list<Real> values) : data_(values) {}
  explicit Vector(std::vector<Real> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<Real> span() { return data_; }
  std::span<const Real> span() const { return data_; }
  operator std::span<const Real>() const { return data_; }

  void fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<Real> data_;
};

template <typename Real>
class Matrix {
 public:
  using value_type = Real;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<Real> row(std::size_t r) {
    return std::span<Real>(data_).subspan(r * cols_, cols_);
  }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(data_).subspan(r * cols_, cols_);
  }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> span() { return data_; }
  std::span<const Real> span() const { return data_; }

  void fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

template <typename Real>
std::string shape_string(const Matrix<Real>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Forward kernels.

/// m * x. Rows are evaluated with OpenMP once the matrix is large enough and
/// the caller is not already inside a parallel region. Each row is reduced by
/// one thread in column order, so the result is bitwise identical to
/// matvec_serial.
template <typename Real>
Vector<Real> matvec(const Matrix<Real>& m, std::span<const Real> x);

/// Single-threaded reference for matvec.
template <typename Real>
Vector<Real> matvec_serial(const Matrix<Real>& m, std::span<const Real> x);

/// out += m * x
template <typename Real>
void matvec_accumulate(const Matrix<Real>& m, std::span<const Real> x,
                       std::span<Real> out);

/// out += m^T * g
template <typename Real>
void matvec_transposed_accumulate(const Matrix<Real>& m, std::span<const Real> g,
                                  std::span<Real> out);

/// grad += g * x^T
template <typename Real>
void outer_accumulate(Matrix<Real>& grad, std::span<const Real> g,
                      std::span<const Real> x);

template <typename Real>
Real sigmoid(Real x);

template <typename Real>
Vector<Real> sigmoid(std::span<const Real> x);

template <typename Real>
Vector<Real> tanh(std::span<const Real> x);

/// Max-subtracted softmax. Throws std::invalid_argument on empty input.
template <typename Real>
Vector<Real> softmax(std::span<const Real> logits);

template <typename Real>
Vector<Real> add(std::span<const Real> a, std::span<const Real> b);

template <typename Real>
Vector<Real> hadamard(std::span<const Real> a, std::span<const Real> b);

template <typename Real>
Vector<Real> concat(std::span<const Real> a, std::span<const Real> b);

// Backward kernels. Activation gradients take the cached forward output.

template <typename Real>
struct MatvecGrad {
  Matrix<Real> matrix;
  Vector<Real> input;
};

template <typename Real>
MatvecGrad<Real> matvec_grad(const Matrix<Real>& m, std::span<const Real> x,
                             std::span<const Real> upstream);

template <typename Real>
Vector<Real> sigmoid_grad(std::span<const Real> output,
                          std::span<const Real> upstream);

template <typename Real>
Vector<Real> tanh_grad(std::span<const Real> output,
                       std::span<const Real> upstream);

/// J^T * upstream for p = softmax(z): p * (upstream - <upstream, p>).
template <typename Real>
Vector<Real> softmax_grad(std::span<const Real> probs,
                          std::span<const Real> upstream);

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> add_grad(std::span<const Real> upstream);

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> hadamard_grad(std::span<const Real> a,
                                                    std::span<const Real> b,
                                                    std::span<const Real> upstream);

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> concat_grad(std::span<const Real> upstream,
                                                  std::size_t first_len);

// In-place helpers used by the layer backward passes.

template <typename Real>
void add_into(std::span<Real> dst, std::span<const Real> src);

template <typename Real>
void scale_into(std::span<Real> dst, Real factor);

template <typename Real>
bool all_finite(std::span<const Real> values);

namespace testing {

/// Replaces tanh_grad with an incorrect derivative on the current thread while
/// alive. Exists so the gradient checker can be shown to catch a broken kernel.
class ScopedTanhGradFault {
 public:
  ScopedTanhGradFault();
  ~ScopedTanhGradFault();
  ScopedTanhGradFault(const ScopedTanhGradFault&) = delete;
  ScopedTanhGradFault& operator=(const ScopedTanhGradFault&) = delete;

 private:
  bool previous_;
};

}  // namespace testing

}  // namespace avsdn
