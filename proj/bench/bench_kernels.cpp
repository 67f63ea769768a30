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

// Serial vs OpenMP timings for the two parallel paths: row-parallel matvec and
// per-video batch gradients. Also confirms both paths agree bitwise.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <numeric>
#include <vector>

#include "avsdn/batch.hpp"
#include "avsdn/data_io.hpp"
#include "avsdn/tensor.hpp"

using namespace avsdn;

namespace {

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    best = std::min(best, s);
  }
  return best;
}

bool same(const ModelParams<float>& a, const ModelParams<float>& b) {
  const auto x = a.tensors();
  const auto y = b.tensors();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::equal(x[i].values.begin(), x[i].values.end(), y[i].values.begin())) return false;
  }
  return true;
}

}  // namespace

int main() {
  std::printf("threads\t%d\n", omp_get_max_threads());

  Xorshift64Star rng(1);
  for (const std::size_t n : {256, 1024, 2048}) {
    Matrix<float> m(n, n);
    for (auto& v : m.span()) v = static_cast<float>(rng.uniform(-1, 1));
    Vector<float> x(n);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    Vector<float> ys;
    Vector<float> yp;
    const double ts = best_of(20, [&] { ys = matvec_serial<float>(m, x); });
    const double tp = best_of(20, [&] { yp = matvec<float>(m, x); });
    std::printf("matvec\t%zux%zu\tserial %.3f ms\tparallel %.3f ms\tspeedup %.2f\t%s\n", n, n,
                ts * 1e3, tp * 1e3, ts / tp, ys == yp ? "bitwise-equal" : "MISMATCH");
  }

  SynthConfig sc;
  sc.train_videos = 64;
  sc.val_videos = 0;
  sc.test_videos = 0;
  std::vector<FeatureSequence> videos;
  for (auto& v : generate_synthetic_videos(sc).videos) videos.push_back(v.features);
  const auto set = make_training_set<float>(videos, Setting::supervised);
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (const std::size_t hidden : {32, 128}) {
    const auto params = ModelParams<float>::initialize({16, 24, hidden, 4}, rng);
    BatchGradient<float> s;
    BatchGradient<float> p;
    const double ts = best_of(3, [&] {
      s = batch_gradient_serial<float>(params, set, idx, InitMode::fusion, 1.0f);
    });
    const double tp = best_of(3, [&] {
      p = batch_gradient_parallel<float>(params, set, idx, InitMode::fusion, 1.0f);
    });
    std::printf("batch_gradient\th=%zu, %zu videos\tserial %.1f ms\tparallel %.1f ms\t"
                "speedup %.2f\t%s\n",
                hidden, idx.size(), ts * 1e3, tp * 1e3, ts / tp,
                same(s.grads, p.grads) && s.loss_sum == p.loss_sum ? "bitwise-equal"
                                                                   : "MISMATCH");
  }
  return 0;
}
