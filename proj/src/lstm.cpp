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

#include "avsdn/lstm.hpp"

#include <cmath>
#include <string>

namespace avsdn {

const char* gate_name(std::size_t gate) {
  static constexpr const char* kNames[kGateCount] = {"forget", "input", "output",
                                                     "cell"};
  return gate < kGateCount ? kNames[gate] : "?";
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::zeros(std::size_t input_size,
                                         std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) {
    throw ShapeError("LSTM sizes must be positive (input " +
                     std::to_string(input_size) + ", hidden " +
                     std::to_string(hidden_size) + ")");
  }
  LstmParams p;
  for (auto& g : p.gates) {
    g.w = Matrix<Real>(hidden_size, input_size);
    g.u = Matrix<Real>(hidden_size, hidden_size);
    g.b = Vector<Real>(hidden_size);
  }
  return p;
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::xavier(std::size_t input_size,
                                          std::size_t hidden_size,
                                          Xorshift64Star& rng, Real forget_bias) {
  auto p = zeros(input_size, hidden_size);
  for (auto& g : p.gates) {
    xavier_uniform(g.w.span(), input_size, hidden_size, rng);
    xavier_uniform(g.u.span(), hidden_size, hidden_size, rng);
  }
  p.gate(Gate::forget).b.fill(forget_bias);
  return p;
}

template <typename Real>
void LstmParams<Real>::validate() const {
  const std::size_t d = input_size();
  const std::size_t h = hidden_size();
  if (d == 0 || h == 0) throw ShapeError("LSTM has an empty gate");
  for (std::size_t k = 0; k < kGateCount; ++k) {
    const auto& g = gates[k];
    if (g.w.rows() != h || g.w.cols() != d || g.u.rows() != h || g.u.cols() != h ||
        g.b.size() != h) {
      throw ShapeError(std::string("LSTM gate '") + gate_name(k) + "' has W " +
                       shape_string(g.w) + ", U " + shape_string(g.u) + ", b " +
                       std::to_string(g.b.size()) + "; expected W " +
                       std::to_string(h) + "x" + std::to_string(d) + ", U " +
                       std::to_string(h) + "x" + std::to_string(h));
    }
  }
}

namespace {

template <typename Real>
Vector<Real> gate_preactivation(const GateParams<Real>& g, std::span<const Real> x,
                                std::span<const Real> h_prev) {
  Vector<Real> z = g.b;
  matvec_accumulate<Real>(g.w, x, z.span());
  matvec_accumulate<Real>(g.u, h_prev, z.span());
  return z;
}

template <typename Real>
void check_state(const LstmState<Real>& s, std::size_t h, const char* what) {
  if (s.h.size() != h || s.c.size() != h) {
    throw ShapeError(std::string(what) + ": state widths (" +
                     std::to_string(s.h.size()) + ", " + std::to_string(s.c.size()) +
                     ") do not match hidden size " + std::to_string(h));
  }
}

}  // namespace

template <typename Real>
StepResult<Real> lstm_step(const LstmParams<Real>& params,
                           const LstmState<Real>& prev, std::span<const Real> x) {
  const std::size_t h = params.hidden_size();
  if (x.size() != params.input_size()) {
    throw ShapeError("lstm_step: input length " + std::to_string(x.size()) +
                     " but W is " + shape_string(params.gates[0].w));
  }
  check_state(prev, h, "lstm_step");

  StepTrace<Real> t;
  t.x = Vector<Real>(std::vector<Real>(x.begin(), x.end()));
  t.h_prev = prev.h;
  t.c_prev = prev.c;
  t.forget = sigmoid<Real>(gate_preactivation<Real>(params.gate(Gate::forget), x, prev.h));
  t.input = sigmoid<Real>(gate_preactivation<Real>(params.gate(Gate::input), x, prev.h));
  t.output = sigmoid<Real>(gate_preactivation<Real>(params.gate(Gate::output), x, prev.h));
  t.candidate = tanh<Real>(gate_preactivation<Real>(params.gate(Gate::cell), x, prev.h));

  t.c = Vector<Real>(h);
  for (std::size_t k = 0; k < h; ++k) {
    t.c[k] = t.forget[k] * prev.c[k] + t.input[k] * t.candidate[k];
  }
  t.tanh_c = tanh<Real>(t.c);
  t.h = hadamard<Real>(t.output, t.tanh_c);

  LstmState<Real> next{t.h, t.c};
  return {std::move(next), std::move(t)};
}

template <typename Real>
SequenceResult<Real> run_sequence(const LstmParams<Real>& params,
                                  const LstmState<Real>& initial,
                                  const Matrix<Real>& inputs) {
  params.validate();
  check_state(initial, params.hidden_size(), "run_sequence");
  SequenceResult<Real> result{initial, {initial, {}}};
  result.trace.steps.reserve(inputs.rows());
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    auto step = lstm_step(params, result.state, inputs.row(t));
    result.state = std::move(step.state);
    result.trace.steps.push_back(std::move(step.trace));
  }
  return result;
}

template <typename Real>
SequenceResult<Real> encode_sequence(const LstmParams<Real>& params,
                                     const Matrix<Real>& inputs, std::size_t steps) {
  if (steps == 0 || inputs.rows() == 0) {
    throw std::invalid_argument("encode_sequence: empty sequence");
  }
  if (inputs.rows() != steps) {
    throw ShapeError("encode_sequence: got " + std::to_string(inputs.rows()) +
                     " inputs, expected " + std::to_string(steps));
  }
  return run_sequence(params, LstmState<Real>::zeros(params.hidden_size()), inputs);
}

template <typename Real>
LstmGradients<Real> lstm_backward(const LstmParams<Real>& params,
                                  const EncoderTrace<Real>& trace,
                                  std::span<const Vector<Real>> grad_h_steps,
                                  const LstmState<Real>& grad_final) {
  params.validate();
  const std::size_t h = params.hidden_size();
  const std::size_t d = params.input_size();
  const std::size_t steps = trace.steps.size();
  check_state(grad_final, h, "lstm_backward");
  if (!grad_h_steps.empty() && grad_h_steps.size() != steps) {
    throw ShapeError("lstm_backward: " + std::to_string(grad_h_steps.size()) +
                     " per-step gradients for a trace of " + std::to_string(steps));
  }
  for (const auto& s : trace.steps) {
    if (s.x.size() != d || s.h.size() != h) {
      throw ShapeError("lstm_backward: trace step (input " +
                       std::to_string(s.x.size()) + ", hidden " +
                       std::to_string(s.h.size()) + ") does not match params " +
                       shape_string(params.gates[0].w));
    }
  }

  LstmGradients<Real> grads{LstmParams<Real>::zeros(d, h),
                            std::vector<Vector<Real>>(steps, Vector<Real>(d)),
                            LstmState<Real>::zeros(h)};

  Vector<Real> dh = grad_final.h;
  Vector<Real> dc = grad_final.c;
  for (std::size_t rev = 0; rev < steps; ++rev) {
    const std::size_t t = steps - 1 - rev;
    const auto& s = trace.steps[t];
    if (!grad_h_steps.empty()) {
      if (grad_h_steps[t].size() != h) {
        throw ShapeError("lstm_backward: per-step gradient width " +
                         std::to_string(grad_h_steps[t].size()));
      }
      add_into<Real>(dh.span(), grad_h_steps[t]);
    }

    // h = o * tanh(c)
    auto [d_output, d_tanh_c] = hadamard_grad<Real>(s.output, s.tanh_c, dh);
    add_into<Real>(dc.span(), tanh_grad<Real>(s.tanh_c, d_tanh_c));

    // c = f * c_prev + i * g
    auto [d_forget, d_c_prev] = hadamard_grad<Real>(s.forget, s.c_prev, dc);
    auto [d_input, d_candidate] = hadamard_grad<Real>(s.input, s.candidate, dc);

    std::array<Vector<Real>, kGateCount> dz;
    dz[static_cast<std::size_t>(Gate::forget)] = sigmoid_grad<Real>(s.forget, d_forget);
    dz[static_cast<std::size_t>(Gate::input)] = sigmoid_grad<Real>(s.input, d_input);
    dz[static_cast<std::size_t>(Gate::output)] = sigmoid_grad<Real>(s.output, d_output);
    dz[static_cast<std::size_t>(Gate::cell)] = tanh_grad<Real>(s.candidate, d_candidate);

    Vector<Real> dh_prev(h);
    for (std::size_t k = 0; k < kGateCount; ++k) {
      const auto& g = params.gates[k];
      auto& gg = grads.params.gates[k];
      outer_accumulate<Real>(gg.w, dz[k], s.x);
      outer_accumulate<Real>(gg.u, dz[k], s.h_prev);
      add_into<Real>(gg.b.span(), dz[k]);
      matvec_transposed_accumulate<Real>(g.w, dz[k], grads.inputs[t].span());
      matvec_transposed_accumulate<Real>(g.u, dz[k], dh_prev.span());
    }
    dh = std::move(dh_prev);
    dc = std::move(d_c_prev);
  }
  grads.initial = {std::move(dh), std::move(dc)};
  return grads;
}

#define AVSDN_INSTANTIATE_LSTM(Real)                                              \
  template struct LstmParams<Real>;                                               \
  template StepResult<Real> lstm_step(const LstmParams<Real>&,                    \
                                      const LstmState<Real>&,                     \
                                      std::span<const Real>);                     \
  template SequenceResult<Real> run_sequence(const LstmParams<Real>&,             \
                                             const LstmState<Real>&,              \
                                             const Matrix<Real>&);                \
  template SequenceResult<Real> encode_sequence(const LstmParams<Real>&,          \
                                                const Matrix<Real>&, std::size_t); \
  template LstmGradients<Real> lstm_backward(                                     \
      const LstmParams<Real>&, const EncoderTrace<Real>&,                         \
      std::span<const Vector<Real>>, const LstmState<Real>&);

AVSDN_INSTANTIATE_LSTM(float)
AVSDN_INSTANTIATE_LSTM(double)

}  // namespace avsdn
