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

#include "avsdn/tensor.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

namespace avsdn {

namespace {

thread_local bool tanh_grad_fault = false;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelMatvecWork = std::size_t{1} << 16;

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length " + std::to_string(a) +
                     " vs " + std::to_string(b));
  }
}

template <typename Real>
void check_matvec(const Matrix<Real>& m, std::size_t x_len, const char* what) {
  if (m.cols() != x_len) {
    throw ShapeError(std::string(what) + ": matrix " + shape_string(m) +
                     " cannot multiply vector of length " + std::to_string(x_len));
  }
}

template <typename Real>
Real dot_row(const Real* row, const Real* x, std::size_t n) {
  Real sum = Real(0);
  for (std::size_t j = 0; j < n; ++j) sum += row[j] * x[j];
  return sum;
}

}  // namespace

const char* to_string(Precision p) {
  return p == Precision::standard ? "standard" : "checking";
}

Precision parse_precision(const std::string& text) {
  if (text == "standard") return Precision::standard;
  if (text == "checking") return Precision::checking;
  throw std::invalid_argument("unknown precision '" + text + "'");
}

template <typename Real>
Vector<Real> matvec_serial(const Matrix<Real>& m, std::span<const Real> x) {
  check_matvec(m, x.size(), "matvec");
  Vector<Real> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out[i] = dot_row(m.row(i).data(), x.data(), m.cols());
  }
  return out;
}

template <typename Real>
Vector<Real> matvec(const Matrix<Real>& m, std::span<const Real> x) {
  check_matvec(m, x.size(), "matvec");
  Vector<Real> out(m.rows());
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const std::size_t cols = m.cols();
  const bool parallel = m.size() >= kParallelMatvecWork && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    out[static_cast<std::size_t>(i)] =
        dot_row(m.data() + static_cast<std::size_t>(i) * cols, x.data(), cols);
  }
  return out;
}

template <typename Real>
void matvec_accumulate(const Matrix<Real>& m, std::span<const Real> x,
                       std::span<Real> out) {
  check_matvec(m, x.size(), "matvec_accumulate");
  require_same_length(m.rows(), out.size(), "matvec_accumulate output");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const std::size_t cols = m.cols();
  const bool parallel = m.size() >= kParallelMatvecWork && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] += dot_row(m.data() + r * cols, x.data(), cols);
  }
}

template <typename Real>
void matvec_transposed_accumulate(const Matrix<Real>& m, std::span<const Real> g,
                                  std::span<Real> out) {
  if (m.rows() != g.size() || m.cols() != out.size()) {
    throw ShapeError("matvec_transposed: matrix " + shape_string(m) +
                     " with upstream " + std::to_string(g.size()) +
                     " and output " + std::to_string(out.size()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const Real gi = g[i];
    if (gi == Real(0)) continue;
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j] * gi;
  }
}

template <typename Real>
void outer_accumulate(Matrix<Real>& grad, std::span<const Real> g,
                      std::span<const Real> x) {
  if (grad.rows() != g.size() || grad.cols() != x.size()) {
    throw ShapeError("outer_accumulate: gradient " + shape_string(grad) +
                     " vs outer product " + std::to_string(g.size()) + "x" +
                     std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    const Real gi = g[i];
    if (gi == Real(0)) continue;
    auto row = grad.row(i);
    for (std::size_t j = 0; j < grad.cols(); ++j) row[j] += gi * x[j];
  }
}

template <typename Real>
Real sigmoid(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
Vector<Real> sigmoid(std::span<const Real> x) {
  Vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

template <typename Real>
Vector<Real> tanh(std::span<const Real> x) {
  Vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

template <typename Real>
Vector<Real> softmax(std::span<const Real> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of an empty vector");
  Real max_logit = logits[0];
  for (const Real v : logits) max_logit = std::max(max_logit, v);
  Vector<Real> out(logits.size());
  Real total = Real(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

template <typename Real>
Vector<Real> add(std::span<const Real> a, std::span<const Real> b) {
  require_same_length(a.size(), b.size(), "add");
  Vector<Real> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <typename Real>
Vector<Real> hadamard(std::span<const Real> a, std::span<const Real> b) {
  require_same_length(a.size(), b.size(), "hadamard");
  Vector<Real> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename Real>
Vector<Real> concat(std::span<const Real> a, std::span<const Real> b) {
  Vector<Real> out(a.size() + b.size());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

template <typename Real>
MatvecGrad<Real> matvec_grad(const Matrix<Real>& m, std::span<const Real> x,
                             std::span<const Real> upstream) {
  check_matvec(m, x.size(), "matvec_grad");
  require_same_length(m.rows(), upstream.size(), "matvec_grad upstream");
  MatvecGrad<Real> grad{Matrix<Real>(m.rows(), m.cols()), Vector<Real>(m.cols())};
  outer_accumulate(grad.matrix, upstream, x);
  matvec_transposed_accumulate(m, upstream, grad.input.span());
  return grad;
}

template <typename Real>
Vector<Real> sigmoid_grad(std::span<const Real> output,
                          std::span<const Real> upstream) {
  require_same_length(output.size(), upstream.size(), "sigmoid_grad");
  Vector<Real> out(output.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    out[i] = upstream[i] * output[i] * (Real(1) - output[i]);
  }
  return out;
}

template <typename Real>
Vector<Real> tanh_grad(std::span<const Real> output,
                       std::span<const Real> upstream) {
  require_same_length(output.size(), upstream.size(), "tanh_grad");
  Vector<Real> out(output.size());
  if (tanh_grad_fault) {
    for (std::size_t i = 0; i < output.size(); ++i) {
      out[i] = upstream[i] * (Real(1) - output[i]);
    }
    return out;
  }
  for (std::size_t i = 0; i < output.size(); ++i) {
    out[i] = upstream[i] * (Real(1) - output[i] * output[i]);
  }
  return out;
}

template <typename Real>
Vector<Real> softmax_grad(std::span<const Real> probs,
                          std::span<const Real> upstream) {
  require_same_length(probs.size(), upstream.size(), "softmax_grad");
  Real inner = Real(0);
  for (std::size_t i = 0; i < probs.size(); ++i) inner += upstream[i] * probs[i];
  Vector<Real> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] * (upstream[i] - inner);
  }
  return out;
}

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> add_grad(std::span<const Real> upstream) {
  Vector<Real> g(std::vector<Real>(upstream.begin(), upstream.end()));
  return {g, g};
}

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> hadamard_grad(std::span<const Real> a,
                                                    std::span<const Real> b,
                                                    std::span<const Real> upstream) {
  require_same_length(a.size(), b.size(), "hadamard_grad");
  require_same_length(a.size(), upstream.size(), "hadamard_grad upstream");
  return {hadamard(upstream, b), hadamard(upstream, a)};
}

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> concat_grad(std::span<const Real> upstream,
                                                  std::size_t first_len) {
  if (first_len > upstream.size()) {
    throw ShapeError("concat_grad: split point " + std::to_string(first_len) +
                     " beyond upstream length " + std::to_string(upstream.size()));
  }
  const auto first = upstream.first(first_len);
  const auto second = upstream.subspan(first_len);
  return {Vector<Real>(std::vector<Real>(first.begin(), first.end())),
          Vector<Real>(std::vector<Real>(second.begin(), second.end()))};
}

template <typename Real>
void add_into(std::span<Real> dst, std::span<const Real> src) {
  require_same_length(dst.size(), src.size(), "add_into");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename Real>
void scale_into(std::span<Real> dst, Real factor) {
  for (auto& v : dst) v *= factor;
}

template <typename Real>
bool all_finite(std::span<const Real> values) {
  for (const Real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace testing {

ScopedTanhGradFault::ScopedTanhGradFault() : previous_(tanh_grad_fault) {
  tanh_grad_fault = true;
}

ScopedTanhGradFault::~ScopedTanhGradFault() { tanh_grad_fault = previous_; }

}  // namespace testing

#define AVSDN_INSTANTIATE_TENSOR(Real)                                            \
  template Vector<Real> matvec(const Matrix<Real>&, std::span<const Real>);       \
  template Vector<Real> matvec_serial(const Matrix<Real>&, std::span<const Real>); \
  template void matvec_accumulate(const Matrix<Real>&, std::span<const Real>,     \
                                  std::span<Real>);                               \
  template void matvec_transposed_accumulate(const Matrix<Real>&,                 \
                                             std::span<const Real>,               \
                                             std::span<Real>);                    \
  template void outer_accumulate(Matrix<Real>&, std::span<const Real>,            \
                                 std::span<const Real>);                          \
  template Real sigmoid(Real);                                                    \
  template Vector<Real> sigmoid(std::span<const Real>);                           \
  template Vector<Real> tanh(std::span<const Real>);                              \
  template Vector<Real> softmax(std::span<const Real>);                           \
  template Vector<Real> add(std::span<const Real>, std::span<const Real>);        \
  template Vector<Real> hadamard(std::span<const Real>, std::span<const Real>);   \
  template Vector<Real> concat(std::span<const Real>, std::span<const Real>);      \
  template MatvecGrad<Real> matvec_grad(const Matrix<Real>&,                      \
                                        std::span<const Real>,                    \
                                        std::span<const Real>);                   \
  template Vector<Real> sigmoid_grad(std::span<const Real>,                       \
                                     std::span<const Real>);                      \
  template Vector<Real> tanh_grad(std::span<const Real>, std::span<const Real>);  \
  template Vector<Real> softmax_grad(std::span<const Real>,                       \
                                     std::span<const Real>);                      \
  template std::pair<Vector<Real>, Vector<Real>> add_grad(std::span<const Real>); \
  template std::pair<Vector<Real>, Vector<Real>> hadamard_grad(                   \
      std::span<const Real>, std::span<const Real>, std::span<const Real>);       \
  template std::pair<Vector<Real>, Vector<Real>> concat_grad(                     \
      std::span<const Real>, std::size_t);                                        \
  template void add_into(std::span<Real>, std::span<const Real>);                 \
  template void scale_into(std::span<Real>, Real);                                \
  template bool all_finite(std::span<const Real>);

AVSDN_INSTANTIATE_TENSOR(float)
AVSDN_INSTANTIATE_TENSOR(double)

}  // namespace avsdn
