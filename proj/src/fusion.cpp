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

#include "avsdn/fusion.hpp"

#include <string>

namespace avsdn {

template <typename Real>
Mlp<Real> Mlp<Real>::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
  if (input == 0 || hidden == 0 || output == 0) {
    throw ShapeError("MLP widths must be positive");
  }
  return {Matrix<Real>(hidden, input), Vector<Real>(hidden),
          Matrix<Real>(output, hidden), Vector<Real>(output)};
}

template <typename Real>
Mlp<Real> Mlp<Real>::xavier(std::size_t input, std::size_t hidden,
                            std::size_t output, Xorshift64Star& rng) {
  auto mlp = zeros(input, hidden, output);
  xavier_uniform(mlp.w1.span(), input, hidden, rng);
  xavier_uniform(mlp.w2.span(), hidden, output, rng);
  return mlp;
}

template <typename Real>
MlpTrace<Real> mlp_forward(const Mlp<Real>& mlp, std::span<const Real> x) {
  MlpTrace<Real> t;
  t.input = Vector<Real>(std::vector<Real>(x.begin(), x.end()));
  Vector<Real> pre = mlp.b1;
  matvec_accumulate<Real>(mlp.w1, x, pre.span());
  t.hidden = tanh<Real>(pre);
  t.output = mlp.b2;
  matvec_accumulate<Real>(mlp.w2, t.hidden, t.output.span());
  return t;
}

template <typename Real>
Vector<Real> mlp_backward(const Mlp<Real>& mlp, const MlpTrace<Real>& trace,
                          std::span<const Real> upstream, Mlp<Real>& grads) {
  if (upstream.size() != mlp.output_size()) {
    throw ShapeError("mlp_backward: upstream length " +
                     std::to_string(upstream.size()) + " vs output layer " +
                     shape_string(mlp.w2));
  }
  outer_accumulate<Real>(grads.w2, upstream, trace.hidden);
  add_into<Real>(grads.b2.span(), upstream);
  Vector<Real> d_hidden(mlp.w2.cols());
  matvec_transposed_accumulate<Real>(mlp.w2, upstream, d_hidden.span());
  const Vector<Real> d_pre = tanh_grad<Real>(trace.hidden, d_hidden);
  outer_accumulate<Real>(grads.w1, d_pre, trace.input);
  add_into<Real>(grads.b1.span(), d_pre);
  Vector<Real> d_input(mlp.w1.cols());
  matvec_transposed_accumulate<Real>(mlp.w1, d_pre, d_input.span());
  return d_input;
}

template <typename Real>
FusionParams<Real> FusionParams<Real>::zeros(std::size_t width) {
  return {Mlp<Real>::zeros(width, width, width), Mlp<Real>::zeros(width, width, width)};
}

template <typename Real>
FusionParams<Real> FusionParams<Real>::xavier(std::size_t width, Xorshift64Star& rng) {
  auto hidden = Mlp<Real>::xavier(width, width, width, rng);
  auto cell = Mlp<Real>::xavier(width, width, width, rng);
  return {std::move(hidden), std::move(cell)};
}

namespace {

template <typename Real>
Vector<Real> fuse_pathway(const Mlp<Real>& mlp, std::span<const Real> audio,
                          std::span<const Real> visual, PathwayTrace<Real>& trace) {
  trace.audio_mlp = mlp_forward(mlp, audio);
  trace.visual_mlp = mlp_forward(mlp, visual);
  const std::size_t n = audio.size();
  Vector<Real> shared(n);
  for (std::size_t k = 0; k < n; ++k) {
    shared[k] = Real(0.5) * (trace.audio_mlp.output[k] + trace.visual_mlp.output[k]);
  }
  trace.audio_residual = tanh<Real>(add<Real>(audio, shared));
  trace.visual_residual = tanh<Real>(add<Real>(visual, shared));
  return add<Real>(trace.audio_residual, trace.visual_residual);
}

template <typename Real>
std::pair<Vector<Real>, Vector<Real>> fuse_pathway_backward(
    const Mlp<Real>& mlp, const PathwayTrace<Real>& trace,
    std::span<const Real> upstream, Mlp<Real>& grads) {
  auto [d_audio_res, d_visual_res] = add_grad<Real>(upstream);
  Vector<Real> d_audio = tanh_grad<Real>(trace.audio_residual, d_audio_res);
  Vector<Real> d_visual = tanh_grad<Real>(trace.visual_residual, d_visual_res);
  Vector<Real> d_mlp_out = add<Real>(d_audio, d_visual);
  scale_into<Real>(d_mlp_out.span(), Real(0.5));
  add_into<Real>(d_audio.span(), mlp_backward<Real>(mlp, trace.audio_mlp, d_mlp_out, grads));
  add_into<Real>(d_visual.span(),
                 mlp_backward<Real>(mlp, trace.visual_mlp, d_mlp_out, grads));
  return {std::move(d_audio), std::move(d_visual)};
}

}  // namespace

template <typename Real>
FusionResult<Real> fuse(const FusionParams<Real>& params, const LstmState<Real>& audio,
                        const LstmState<Real>& visual) {
  const std::size_t w = params.width();
  if (audio.h.size() != visual.h.size() || audio.c.size() != visual.c.size()) {
    throw ShapeError("fuse: audio state width " + std::to_string(audio.h.size()) +
                     " vs visual state width " + std::to_string(visual.h.size()));
  }
  if (audio.h.size() != w || audio.c.size() != w) {
    throw ShapeError("fuse: state width " + std::to_string(audio.h.size()) +
                     " vs fusion width " + std::to_string(w));
  }
  FusionResult<Real> r;
  r.fused.h = fuse_pathway<Real>(params.hidden_mlp, audio.h, visual.h, r.trace.hidden);
  r.fused.c = fuse_pathway<Real>(params.cell_mlp, audio.c, visual.c, r.trace.cell);
  return r;
}

template <typename Real>
FusionGradients<Real> fuse_backward(const FusionTrace<Real>& trace,
                                    const FusionParams<Real>& params,
                                    const FusedState<Real>& grad) {
  const std::size_t w = params.width();
  if (grad.h.size() != w || grad.c.size() != w ||
      trace.hidden.audio_residual.size() != w) {
    throw ShapeError("fuse_backward: gradient width " + std::to_string(grad.h.size()) +
                     " vs fusion width " + std::to_string(w));
  }
  FusionGradients<Real> g{FusionParams<Real>::zeros(w), {}, {}};
  auto [dh_audio, dh_visual] = fuse_pathway_backward<Real>(
      params.hidden_mlp, trace.hidden, grad.h, g.params.hidden_mlp);
  auto [dc_audio, dc_visual] =
      fuse_pathway_backward<Real>(params.cell_mlp, trace.cell, grad.c, g.params.cell_mlp);
  g.audio = {std::move(dh_audio), std::move(dc_audio)};
  g.visual = {std::move(dh_visual), std::move(dc_visual)};
  return g;
}

#define AVSDN_INSTANTIATE_FUSION(Real)                                            \
  template struct Mlp<Real>;                                                      \
  template struct FusionParams<Real>;                                             \
  template MlpTrace<Real> mlp_forward(const Mlp<Real>&, std::span<const Real>);   \
  template Vector<Real> mlp_backward(const Mlp<Real>&, const MlpTrace<Real>&,     \
                                     std::span<const Real>, Mlp<Real>&);          \
  template FusionResult<Real> fuse(const FusionParams<Real>&,                     \
                                   const LstmState<Real>&, const LstmState<Real>&); \
  template FusionGradients<Real> fuse_backward(const FusionTrace<Real>&,          \
                                               const FusionParams<Real>&,         \
                                               const FusedState<Real>&);

AVSDN_INSTANTIATE_FUSION(float)
AVSDN_INSTANTIATE_FUSION(double)

}  // namespace avsdn
