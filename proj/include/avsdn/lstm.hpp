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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "avsdn/rng.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

/// Gate order used for storage, iteration and checkpoints.
enum class Gate : std::size_t { forget = 0, input = 1, output = 2, cell = 3 };
inline constexpr std::size_t kGateCount = 4;
const char* gate_name(std::size_t gate);

template <typename Real>
struct GateParams {
  Matrix<Real> w;  // hidden x input
  Matrix<Real> u;  // hidden x hidden, multiplies h_{t-1}
  Vector<Real> b;
};

template <typename Real>
struct LstmParams {
  std::array<GateParams<Real>, kGateCount> gates;

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);

  /// Uniform weights in +-sqrt(6 / (fan_in + fan_out)); forget bias set to
  /// `forget_bias`, other biases zero.
  static LstmParams xavier(std::size_t input_size, std::size_t hidden_size,
                           Xorshift64Star& rng, Real forget_bias = Real(1));

  GateParams<Real>& gate(Gate g) { return gates[static_cast<std::size_t>(g)]; }
  const GateParams<Real>& gate(Gate g) const {
    return gates[static_cast<std::size_t>(g)];
  }

  std::size_t input_size() const { return gates[0].w.cols(); }
  std::size_t hidden_size() const { return gates[0].w.rows(); }

  /// Throws ShapeError unless every gate has the shapes of gate 0.
  void validate() const;
};

template <typename Real>
struct LstmState {
  Vector<Real> h;
  Vector<Real> c;

  static LstmState zeros(std::size_t hidden_size) {
    return {Vector<Real>(hidden_size), Vector<Real>(hidden_size)};
  }
};

/// Forward cache for one time step.
template <typename Real>
struct StepTrace {
  Vector<Real> x;
  Vector<Real> h_prev;
  Vector<Real> c_prev;
  Vector<Real> forget;
  Vector<Real> input;
  Vector<Real> output;
  Vector<Real> candidate;
  Vector<Real> c;
  Vector<Real> tanh_c;
  Vector<Real> h;
};

template <typename Real>
struct EncoderTrace {
  LstmState<Real> initial;
  std::vector<StepTrace<Real>> steps;
};

template <typename Real>
struct StepResult {
  LstmState<Real> state;
  StepTrace<Real> trace;
};

template <typename Real>
struct SequenceResult {
  LstmState<Real> state;
  EncoderTrace<Real> trace;
};

template <typename Real>
StepResult<Real> lstm_step(const LstmParams<Real>& params,
                           const LstmState<Real>& prev, std::span<const Real> x);

/// Runs the cell over the rows of `inputs` starting from `initial`.
template <typename Real>
SequenceResult<Real> run_sequence(const LstmParams<Real>& params,
                                  const LstmState<Real>& initial,
                                  const Matrix<Real>& inputs);

/// Encoder entry point: zero initial state, exactly `steps` rows expected.
template <typename Real>
SequenceResult<Real> encode_sequence(const LstmParams<Real>& params,
                                     const Matrix<Real>& inputs, std::size_t steps);

template <typename Real>
struct LstmGradients {
  LstmParams<Real> params;
  std::vector<Vector<Real>> inputs;  // one per time step
  LstmState<Real> initial;           // gradient on the initial (h, c)
};

/// Backpropagation through time. `grad_h_steps` carries an external gradient
/// on h_t for every step (may be empty for encoders, which only feed their
/// final state forward); `grad_final` is the gradient on (h_T, c_T).
template <typename Real>
LstmGradients<Real> lstm_backward(const LstmParams<Real>& params,
                                  const EncoderTrace<Real>& trace,
                                  std::span<const Vector<Real>> grad_h_steps,
                                  const LstmState<Real>& grad_final);

template <typename Real>
LstmGradients<Real> encode_backward(const EncoderTrace<Real>& trace,
                                    const LstmParams<Real>& params,
                                    const LstmState<Real>& grad_final) {
  return lstm_backward<Real>(params, trace, {}, grad_final);
}

}  // namespace avsdn
