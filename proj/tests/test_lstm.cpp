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

#include <cmath>
#include <vector>

#include "avsdn/lstm.hpp"
#include "doctest.h"
#include "reference_model.hpp"
#include "test_support.hpp"

using namespace avsdn;
using avsdn::test::max_rel_error;
using avsdn::test::numeric_gradient;
using avsdn::test::random_lstm;
using avsdn::test::random_matrix;
using avsdn::test::random_vector;

namespace {

// Scalar objective: fixed random projections of the final (h, c) plus of every
// intermediate h_t, so both gradient paths into BPTT are exercised.
struct Probe {
  Vector<double> wh;
  Vector<double> wc;
  std::vector<Vector<double>> w_steps;
};

Probe make_probe(std::size_t h, std::size_t steps, Xorshift64Star& rng, bool per_step) {
  Probe p{random_vector(h, rng), random_vector(h, rng), {}};
  if (per_step) {
    for (std::size_t t = 0; t < steps; ++t) p.w_steps.push_back(random_vector(h, rng));
  }
  return p;
}

double dot(const Vector<double>& a, const Vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double probe_value(const Probe& p, const SequenceResult<double>& r) {
  double s = dot(p.wh, r.state.h) + dot(p.wc, r.state.c);
  for (std::size_t t = 0; t < p.w_steps.size(); ++t) s += dot(p.w_steps[t], r.trace.steps[t].h);
  return s;
}

}  // namespace

TEST_CASE("zero parameters from the zero state stay at zero") {
  const auto p = LstmParams<double>::zeros(3, 2);
  const auto r = lstm_step<double>(p, LstmState<double>::zeros(2), Vector<double>{1, -2, 3});
  CHECK(r.state.h == Vector<double>{0, 0});
  CHECK(r.state.c == Vector<double>{0, 0});
  for (const double g : r.trace.forget) CHECK(g == 0.5);
  for (const double g : r.trace.input) CHECK(g == 0.5);
  for (const double g : r.trace.output) CHECK(g == 0.5);
  for (const double g : r.trace.candidate) CHECK(g == 0.0);
}

TEST_CASE("zero parameters halve the previous cell") {
  const auto p = LstmParams<double>::zeros(3, 2);
  const LstmState<double> prev{Vector<double>{0.3, -0.1}, Vector<double>{1.2, -3.0}};
  const auto r = lstm_step<double>(p, prev, Vector<double>{0.5, 0.5, 0.5});
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(r.state.c[k] == 0.5 * prev.c[k]);
    CHECK(r.state.h[k] == doctest::Approx(0.5 * std::tanh(0.5 * prev.c[k])).epsilon(1e-15));
  }
}

TEST_CASE("single step matches the scalar reference") {
  Xorshift64Star rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_lstm(3, 2, rng, 1.0);
    const LstmState<double> prev{random_vector(2, rng), random_vector(2, rng)};
    const auto x = random_vector(3, rng);
    const auto got = lstm_step<double>(p, prev, x);
    const reference::Cell ref_prev{{prev.h.begin(), prev.h.end()}, {prev.c.begin(), prev.c.end()}};
    const auto want = reference::lstm_step(p, ref_prev, {x.begin(), x.end()});
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(got.state.h[k] - want.h[k]) < 1e-12);
      CHECK(std::abs(got.state.c[k] - want.c[k]) < 1e-12);
    }
  }
}

TEST_CASE("encode_sequence base case and composition") {
  Xorshift64Star rng(23);
  const auto p = random_lstm(3, 4, rng);

  const auto one = random_matrix(1, 3, rng);
  const auto r1 = encode_sequence<double>(p, one, 1);
  const auto s1 = lstm_step<double>(p, LstmState<double>::zeros(4), one.row(0));
  CHECK(r1.state.h == s1.state.h);
  CHECK(r1.state.c == s1.state.c);

  const auto xs = random_matrix(4, 3, rng);
  const auto r4 = encode_sequence<double>(p, xs, 4);
  auto state = LstmState<double>::zeros(4);
  for (std::size_t t = 0; t < 4; ++t) state = lstm_step<double>(p, state, xs.row(t)).state;
  CHECK(r4.state.h == state.h);
  CHECK(r4.state.c == state.c);
  CHECK(r4.trace.steps.size() == 4);

  const auto zero = encode_sequence<double>(LstmParams<double>::zeros(3, 4), xs, 4);
  CHECK(zero.state.h == Vector<double>(4));
  CHECK(zero.state.c == Vector<double>(4));
}

TEST_CASE("encode_sequence rejects bad lengths") {
  const auto p = LstmParams<double>::zeros(3, 2);
  CHECK_THROWS_AS(encode_sequence<double>(p, Matrix<double>(0, 3), 0), std::invalid_argument);
  CHECK_THROWS_AS(encode_sequence<double>(p, Matrix<double>(3, 3), 4), ShapeError);
  CHECK_THROWS_AS(lstm_step<double>(p, LstmState<double>::zeros(2), Vector<double>{1, 2}),
                  ShapeError);
  CHECK_THROWS_AS(lstm_step<double>(p, LstmState<double>::zeros(3), Vector<double>{1, 2, 3}),
                  ShapeError);
}

TEST_CASE("zero upstream gives zero gradients") {
  Xorshift64Star rng(29);
  const auto p = random_lstm(3, 2, rng);
  const auto r = encode_sequence<double>(p, random_matrix(5, 3, rng), 5);
  const auto g = encode_backward<double>(r.trace, p, LstmState<double>::zeros(2));
  for (const auto& gate : g.params.gates) {
    for (const double v : gate.w.span()) CHECK(v == 0.0);
    for (const double v : gate.u.span()) CHECK(v == 0.0);
    for (const double v : gate.b) CHECK(v == 0.0);
  }
  for (const auto& x : g.inputs) {
    for (const double v : x) CHECK(v == 0.0);
  }
}

TEST_CASE("backward rejects a trace from different parameters") {
  Xorshift64Star rng(31);
  const auto p = random_lstm(3, 2, rng);
  const auto r = encode_sequence<double>(p, random_matrix(2, 3, rng), 2);
  const auto other = random_lstm(4, 2, rng);
  CHECK_THROWS_AS(encode_backward<double>(r.trace, other, LstmState<double>::zeros(2)),
                  ShapeError);
}

TEST_CASE("BPTT matches central differences") {
  for (const std::size_t steps : {std::size_t{1}, std::size_t{5}}) {
    for (const bool per_step : {false, true}) {
      CAPTURE(steps);
      CAPTURE(per_step);
      Xorshift64Star rng(100 + steps);
      auto p = random_lstm(3, 4, rng);
      auto xs = random_matrix(steps, 3, rng, -1.0, 1.0);
      LstmState<double> init{random_vector(4, rng, -0.5, 0.5), random_vector(4, rng, -0.5, 0.5)};
      const auto probe = make_probe(4, steps, rng, per_step);

      auto f = [&] { return probe_value(probe, run_sequence<double>(p, init, xs)); };
      const auto r = run_sequence<double>(p, init, xs);
      const auto g = lstm_backward<double>(p, r.trace, probe.w_steps,
                                           LstmState<double>{probe.wh, probe.wc});

      for (std::size_t k = 0; k < kGateCount; ++k) {
        CAPTURE(gate_name(k));
        CHECK(max_rel_error(g.params.gates[k].w.span(),
                            numeric_gradient(f, p.gates[k].w.span())) < 1e-6);
        CHECK(max_rel_error(g.params.gates[k].u.span(),
                            numeric_gradient(f, p.gates[k].u.span())) < 1e-6);
        CHECK(max_rel_error(g.params.gates[k].b.span(),
                            numeric_gradient(f, p.gates[k].b.span())) < 1e-6);
      }
      const auto gx = numeric_gradient(f, xs.span());
      for (std::size_t t = 0; t < steps; ++t) {
        CHECK(max_rel_error(g.inputs[t].span(), std::span(gx).subspan(t * 3, 3)) < 1e-6);
      }
      CHECK(max_rel_error(g.initial.h.span(), numeric_gradient(f, init.h.span())) < 1e-6);
      CHECK(max_rel_error(g.initial.c.span(), numeric_gradient(f, init.c.span())) < 1e-6);
    }
  }
}

TEST_CASE("hidden entries and gates stay in their open ranges") {
  Xorshift64Star rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_lstm(6, 5, rng, 2.0);
    const auto r = encode_sequence<double>(p, random_matrix(8, 6, rng, -3.0, 3.0), 8);
    for (const auto& s : r.trace.steps) {
      for (const double v : s.h) CHECK((v > -1.0 && v < 1.0));
      for (const auto* gate : {&s.forget, &s.input, &s.output}) {
        for (const double v : *gate) CHECK((v > 0.0 && v < 1.0));
      }
    }
  }
}

TEST_CASE("encoding is deterministic") {
  Xorshift64Star rng(41);
  const auto p = random_lstm(3, 4, rng);
  const auto xs = random_matrix(6, 3, rng);
  const auto a = encode_sequence<double>(p, xs, 6);
  const auto b = encode_sequence<double>(p, xs, 6);
  CHECK(a.state.h == b.state.h);
  CHECK(a.state.c == b.state.c);
}

TEST_CASE("xavier initialization bounds and forget bias") {
  Xorshift64Star rng(43);
  const auto p = LstmParams<double>::xavier(10, 6, rng);
  const double w_limit = std::sqrt(6.0 / 16.0);
  const double u_limit = std::sqrt(6.0 / 12.0);
  for (std::size_t k = 0; k < kGateCount; ++k) {
    for (const double v : p.gates[k].w.span()) CHECK(std::abs(v) <= w_limit);
    for (const double v : p.gates[k].u.span()) CHECK(std::abs(v) <= u_limit);
    const double bias = k == static_cast<std::size_t>(Gate::forget) ? 1.0 : 0.0;
    for (const double v : p.gates[k].b) CHECK(v == bias);
  }
}
