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
#include <limits>
#include <sstream>

#include "avsdn/batch.hpp"
#include "avsdn/data_io.hpp"
#include "avsdn/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace avsdn;
using avsdn::test::kTinyDims;
using avsdn::test::randomize;

namespace {

std::vector<FeatureSequence> small_videos(std::size_t count, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.train_videos = count;
  cfg.val_videos = 0;
  cfg.test_videos = 0;
  cfg.seed = seed;
  std::vector<FeatureSequence> out;
  for (auto& v : generate_synthetic_videos(cfg).videos) out.push_back(std::move(v.features));
  return out;
}

ModelDims dims_for(std::size_t hidden) { return {16, 24, hidden, 4}; }

}  // namespace

TEST_CASE("zero gradients leave parameters unchanged") {
  Xorshift64Star rng(1);
  auto p = ModelParams<double>::initialize(kTinyDims, rng);
  const auto before = p;
  auto g = ModelParams<double>::zeros(kTinyDims);
  auto state = AdamState<double>::zeros(kTinyDims);
  adam_step(p, g, state, AdamConfig{});
  CHECK(state.step == 1);
  const auto a = p.tensors();
  const auto b = before.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin()));
  }
}

TEST_CASE("first Adam step has the closed form -lr*g/(|g|+eps)") {
  Xorshift64Star rng(2);
  auto p = ModelParams<double>::zeros(kTinyDims);
  auto g = ModelParams<double>::zeros(kTinyDims);
  randomize(g, rng, 0.01);
  const auto grads = g;
  auto state = AdamState<double>::zeros(kTinyDims);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.clip_norm.reset();
  adam_step(p, g, state, cfg);
  const auto pt = p.tensors();
  const auto gt = grads.tensors();
  double worst = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    for (std::size_t k = 0; k < pt[i].values.size(); ++k) {
      const double gk = gt[i].values[k];
      const double want = -cfg.learning_rate * gk / (std::abs(gk) + cfg.epsilon);
      worst = std::max(worst, std::abs(pt[i].values[k] - want));
    }
  }
  CHECK(worst < 1e-15);
}

TEST_CASE("global norm clipping scales the gradient") {
  auto g = ModelParams<double>::zeros(kTinyDims);
  g.out_b[0] = 6.0;
  g.out_b[1] = 8.0;
  CHECK(global_norm(g) == 10.0);

  auto p = ModelParams<double>::zeros(kTinyDims);
  auto state = AdamState<double>::zeros(kTinyDims);
  AdamConfig cfg;
  cfg.clip_norm = 1.0;
  adam_step(p, g, state, cfg);
  CHECK(g.out_b[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g.out_b[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(state.first_moment.out_b[1] == doctest::Approx(0.1 * 0.8).epsilon(1e-15));
}

TEST_CASE("non-finite gradients abort with the tensor name") {
  auto p = ModelParams<double>::zeros(kTinyDims);
  auto g = ModelParams<double>::zeros(kTinyDims);
  g.fusion.cell_mlp.w2(1, 2) = std::numeric_limits<double>::quiet_NaN();
  auto state = AdamState<double>::zeros(kTinyDims);
  try {
    adam_step(p, g, state, AdamConfig{});
    FAIL("expected NonFiniteGradientError");
  } catch (const NonFiniteGradientError& e) {
    CHECK(e.tensor() == "fusion.cell.W2");
    CHECK(std::string(e.what()).find("fusion.cell.W2") != std::string::npos);
  }
  CHECK(state.step == 0);
}

TEST_CASE("training configuration is validated") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.epochs = 1;
  cfg.adam.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.adam.learning_rate = 1e-3;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("weak training examples carry only the video label") {
  const auto videos = small_videos(5, 3);
  const auto weak = make_training_set<float>(videos, Setting::weak);
  const auto sup = make_training_set<float>(videos, Setting::supervised);
  for (std::size_t i = 0; i < videos.size(); ++i) {
    REQUIRE(std::holds_alternative<VideoLabel<float>>(weak[i].target));
    const auto& y = std::get<VideoLabel<float>>(weak[i].target);
    CHECK(y.values == video_label_from_segments<float>(videos[i].segment_labels()).values);
    CHECK(std::holds_alternative<SegmentLabels>(sup[i].target));
  }
}

TEST_CASE("parallel batch gradient equals the serial one bitwise") {
  const auto videos = small_videos(9, 4);
  Xorshift64Star rng(5);
  const auto params = ModelParams<float>::initialize(dims_for(8), rng);
  const std::vector<std::size_t> idx{3, 0, 8, 5, 1, 7};
  for (const auto setting : {Setting::supervised, Setting::weak}) {
    const auto set = make_training_set<float>(videos, setting);
    for (const auto mode : {InitMode::fusion, InitMode::label_guided}) {
      const auto s = batch_gradient_serial<float>(params, set, idx, mode, 1.0f);
      const auto p = batch_gradient_parallel<float>(params, set, idx, mode, 1.0f);
      CHECK(s.loss_sum == p.loss_sum);
      const auto a = s.grads.tensors();
      const auto b = p.grads.tensors();
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin()));
      }
    }
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto videos = small_videos(8, 6);
  const auto set = make_training_set<float>(videos, Setting::supervised);
  const auto sel = make_eval_set<float>(videos);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = 6;
  cfg.batch_size = 3;
  cfg.patience = 0;
  const auto a = train<float>(dims_for(6), set, sel, cfg);
  cfg.parallel = true;
  const auto b = train<float>(dims_for(6), set, sel, cfg);
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].loss == b.epochs[e].loss);
    CHECK(a.epochs[e].val_accuracy == b.epochs[e].val_accuracy);
  }
}

TEST_CASE("training writes one tab-separated log line per epoch") {
  const auto videos = small_videos(4, 7);
  const auto set = make_training_set<float>(videos, Setting::weak);
  const auto sel = make_eval_set<float>(videos);
  TrainConfig cfg;
  cfg.setting = Setting::weak;
  cfg.epochs = 2;
  cfg.hidden = 4;
  cfg.patience = 0;
  std::ostringstream log;
  const auto r = train<float>(dims_for(4), set, sel, cfg, &log);
  std::istringstream lines(log.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    ++count;
    CHECK(std::count(line.begin(), line.end(), '\t') == 2);
  }
  CHECK(count == r.epochs.size());

  const auto sup = make_training_set<float>(videos, Setting::supervised);
  CHECK_THROWS_AS(train<float>(dims_for(4), sup, sel, cfg), std::invalid_argument);
}

TEST_CASE("a zero output layer scores chance on balanced data") {
  // One segment of every class per video, so class 0 (the tie winner) is
  // exactly 1/(C+1) of all segments.
  const auto dims = dims_for(4);
  Xorshift64Star rng(8);
  auto params = ModelParams<float>::initialize(dims, rng);
  params.out_w.fill(0.0f);
  params.out_b.fill(0.0f);
  std::vector<EvalExample<float>> examples;
  for (int v = 0; v < 6; ++v) {
    EvalExample<float> ex;
    ex.input.audio = Matrix<float>(5, 16);
    ex.input.visual = Matrix<float>(5, 24);
    for (auto& x : ex.input.audio.span()) x = static_cast<float>(rng.uniform(-1, 1));
    for (auto& x : ex.input.visual.span()) x = static_cast<float>(rng.uniform(-1, 1));
    ex.labels = {4, 3, 2, 1, 0};
    examples.push_back(std::move(ex));
  }
  const auto report = evaluate(params, InitMode::fusion,
                               std::span<const EvalExample<float>>(examples));
  CHECK(report.accuracy == doctest::Approx(0.2));
  CHECK(report.total == std::vector<std::size_t>(5, 6));

  std::ostringstream out;
  print_report(out, report, {"a", "b", "c", "d"});
  CHECK(out.str().rfind("accuracy\t0.2000\n", 0) == 0);
  CHECK(out.str().find("4\tbackground\t0\t6\t0.0000") != std::string::npos);
}

TEST_CASE("swapping modalities in a symmetric fusion model leaves the loss unchanged") {
  // With identical encoders and identical feature widths, exchanging the
  // streams must leave the loss unchanged because the fusion is symmetric.
  const ModelDims dims{6, 6, 4, 3};
  Xorshift64Star rng(9);
  auto p = ModelParams<double>::initialize(dims, rng);
  p.enc_visual = p.enc_audio;
  for (auto& g : p.decoder.gates) {
    // Decoder input is concat(a, v); make it symmetric in the two halves.
    for (std::size_t r = 0; r < g.w.rows(); ++r) {
      for (std::size_t c = 0; c < 6; ++c) g.w(r, 6 + c) = g.w(r, c);
    }
  }
  ModelInput<double> in{avsdn::test::random_matrix(5, 6, rng, -1, 1),
                        avsdn::test::random_matrix(5, 6, rng, -1, 1)};
  const ModelInput<double> swapped{in.visual, in.audio};
  const Target<double> y = SegmentLabels({0, 1, 3, 3, 2}, 4);
  const auto a = evaluate_objective(p, in, y, InitMode::fusion, 1.0);
  const auto b = evaluate_objective(p, swapped, y, InitMode::fusion, 1.0);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
}

TEST_CASE("gradient check passes and catches a broken derivative") {
  const auto ok = gradcheck(GradcheckOptions{});
  CHECK(ok.passed);
  CHECK(ok.max_rel_error < 1e-6);
  CHECK(ok.cases.size() == 8);

  GradcheckReport broken;
  {
    testing::ScopedTanhGradFault fault;
    broken = gradcheck(GradcheckOptions{});
  }
  CHECK_FALSE(broken.passed);

  GradcheckOptions zero;
  zero.zero_params = true;
  const auto z = gradcheck(zero);
  CHECK(std::isfinite(z.max_rel_error));
  CHECK(z.passed);

  std::ostringstream out;
  print_gradcheck(out, ok);
  CHECK(out.str().find("PASS") != std::string::npos);
}
