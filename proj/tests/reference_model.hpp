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

// Scalar-loop reference of the network's forward pass, written against plain
// std::vector<double> with explicit index loops. It shares nothing with the
// library's kernels except the parameter storage it reads from, and serves as
// the independent oracle for forward-pass tests.

#include <cmath>
#include <cstddef>
#include <vector>

#include "avsdn/model.hpp"

namespace avsdn::reference {

using Vec = std::vector<double>;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Cell {
  Vec h;
  Vec c;
};

// params.gates[g]: W (h x d), U (h x h), b (h); gate order f, i, o, candidate.
inline Cell lstm_step(const LstmParams<double>& p, const Cell& prev, const Vec& x) {
  const std::size_t H = p.gates[0].w.rows();
  const std::size_t D = p.gates[0].w.cols();
  Vec z[4];
  for (int g = 0; g < 4; ++g) {
    z[g].assign(H, 0.0);
    const double* W = p.gates[g].w.data();
    const double* U = p.gates[g].u.data();
    for (std::size_t r = 0; r < H; ++r) {
      double s = p.gates[g].b[r];
      for (std::size_t k = 0; k < D; ++k) s += W[r * D + k] * x[k];
      for (std::size_t k = 0; k < H; ++k) s += U[r * H + k] * prev.h[k];
      z[g][r] = s;
    }
  }
  Cell next{Vec(H), Vec(H)};
  for (std::size_t r = 0; r < H; ++r) {
    const double f = sig(z[0][r]);
    const double i = sig(z[1][r]);
    const double o = sig(z[2][r]);
    const double g = std::tanh(z[3][r]);
    next.c[r] = f * prev.c[r] + i * g;
    next.h[r] = o * std::tanh(next.c[r]);
  }
  return next;
}

inline Vec mlp(const Mlp<double>& m, const Vec& x) {
  const std::size_t in = m.w1.cols();
  const std::size_t hid = m.w1.rows();
  const std::size_t out = m.w2.rows();
  Vec hidden(hid);
  for (std::size_t r = 0; r < hid; ++r) {
    double s = m.b1[r];
    for (std::size_t k = 0; k < in; ++k) s += m.w1.data()[r * in + k] * x[k];
    hidden[r] = std::tanh(s);
  }
  Vec y(out);
  for (std::size_t r = 0; r < out; ++r) {
    double s = m.b2[r];
    for (std::size_t k = 0; k < hid; ++k) s += m.w2.data()[r * hid + k] * hidden[k];
    y[r] = s;
  }
  return y;
}

inline Vec fuse_one(const Mlp<double>& m, const Vec& a, const Vec& v) {
  const Vec ga = mlp(m, a);
  const Vec gv = mlp(m, v);
  Vec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double shared = 0.5 * (ga[k] + gv[k]);
    out[k] = std::tanh(a[k] + shared) + std::tanh(v[k] + shared);
  }
  return out;
}

inline Vec row(const Matrix<double>& m, std::size_t t) {
  return Vec(m.data() + t * m.cols(), m.data() + (t + 1) * m.cols());
}

/// Per-segment logits m_t.
inline std::vector<Vec> logits(const ModelParams<double>& p, const ModelInput<double>& in,
                               InitMode mode) {
  const std::size_t T = in.audio.rows();
  const std::size_t H = p.dims.hidden;
  Cell a{Vec(H, 0.0), Vec(H, 0.0)};
  Cell v{Vec(H, 0.0), Vec(H, 0.0)};
  for (std::size_t t = 0; t < T; ++t) {
    a = lstm_step(p.enc_audio, a, row(in.audio, t));
    v = lstm_step(p.enc_visual, v, row(in.visual, t));
  }
  Cell dec;
  switch (mode) {
    case InitMode::fusion:
      dec = {fuse_one(p.fusion.hidden_mlp, a.h, v.h), fuse_one(p.fusion.cell_mlp, a.c, v.c)};
      break;
    case InitMode::visual_only: dec = v; break;
    case InitMode::audio_only: dec = a; break;
    case InitMode::label_guided:
      dec = {Vec(H), Vec(H)};
      for (std::size_t k = 0; k < H; ++k) {
        dec.h[k] = a.h[k] + v.h[k];
        dec.c[k] = a.c[k] + v.c[k];
      }
      break;
  }
  const std::size_t K = p.dims.num_classes();
  std::vector<Vec> out;
  for (std::size_t t = 0; t < T; ++t) {
    Vec x = row(in.audio, t);
    const Vec xv = row(in.visual, t);
    x.insert(x.end(), xv.begin(), xv.end());
    dec = lstm_step(p.decoder, dec, x);
    Vec m(K);
    for (std::size_t r = 0; r < K; ++r) {
      double s = p.out_b[r];
      for (std::size_t k = 0; k < H; ++k) s += p.out_w.data()[r * H + k] * dec.h[k];
      m[r] = s;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace avsdn::reference
