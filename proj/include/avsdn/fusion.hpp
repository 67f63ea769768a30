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

#include <cstddef>
#include <span>

#include "avsdn/lstm.hpp"
#include "avsdn/rng.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

/// One-hidden-layer perceptron: out = W2 * tanh(W1 * x + b1) + b2.
template <typename Real>
struct Mlp {
  Matrix<Real> w1;
  Vector<Real> b1;
  Matrix<Real> w2;
  Vector<Real> b2;

  static Mlp zeros(std::size_t input, std::size_t hidden, std::size_t output);
  static Mlp xavier(std::size_t input, std::size_t hidden, std::size_t output,
                    Xorshift64Star& rng);

  std::size_t input_size() const { return w1.cols(); }
  std::size_t output_size() const { return w2.rows(); }
};

template <typename Real>
struct MlpTrace {
  Vector<Real> input;
  Vector<Real> hidden;  // post-tanh
  Vector<Real> output;
};

template <typename Real>
MlpTrace<Real> mlp_forward(const Mlp<Real>& mlp, std::span<const Real> x);

/// Accumulates parameter gradients into `grads` and returns d(loss)/d(input).
template <typename Real>
Vector<Real> mlp_backward(const Mlp<Real>& mlp, const MlpTrace<Real>& trace,
                          std::span<const Real> upstream, Mlp<Real>& grads);

/// g_theta for hidden states and a second, parallel MLP for cell states. Each
/// is shared between the audio and visual inputs.
template <typename Real>
struct FusionParams {
  Mlp<Real> hidden_mlp;
  Mlp<Real> cell_mlp;

  static FusionParams zeros(std::size_t width);
  static FusionParams xavier(std::size_t width, Xorshift64Star& rng);
  std::size_t width() const { return hidden_mlp.input_size(); }
};

/// Decoder initial state produced by fusion.
template <typename Real>
using FusedState = LstmState<Real>;

/// Cache for one residual pathway (hidden or cell).
template <typename Real>
struct PathwayTrace {
  MlpTrace<Real> audio_mlp;
  MlpTrace<Real> visual_mlp;
  Vector<Real> audio_residual;   // tanh(a + m)
  Vector<Real> visual_residual;  // tanh(v + m)
};

template <typename Real>
struct FusionTrace {
  PathwayTrace<Real> hidden;
  PathwayTrace<Real> cell;
};

template <typename Real>
struct FusionResult {
  FusedState<Real> fused;
  FusionTrace<Real> trace;
};

/// m = (g(a) + g(v)) / 2, a' = tanh(a + m), v' = tanh(v + m), fused = a' + v',
/// applied to hidden states with `hidden_mlp` and to cell states with
/// `cell_mlp`. Sums are formed audio term first; the result is bitwise
/// symmetric under swapping the two modalities.
template <typename Real>
FusionResult<Real> fuse(const FusionParams<Real>& params, const LstmState<Real>& audio,
                        const LstmState<Real>& visual);

template <typename Real>
struct FusionGradients {
  FusionParams<Real> params;
  LstmState<Real> audio;
  LstmState<Real> visual;
};

template <typename Real>
FusionGradients<Real> fuse_backward(const FusionTrace<Real>& trace,
                                    const FusionParams<Real>& params,
                                    const FusedState<Real>& grad);

}  // namespace avsdn
