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

// Per-video work over a set of videos. Each kernel has a serial reference and
// an OpenMP version; the OpenMP version computes one video per iteration into
// its own slot and reduces the slots in video order afterwards, so both
// produce bitwise identical results.

#include <cstddef>
#include <span>
#include <vector>

#include "avsdn/data_io.hpp"
#include "avsdn/model.hpp"

namespace avsdn {

template <typename Real>
struct TrainingExample {
  ModelInput<Real> input;
  Target<Real> target;
};

template <typename Real>
struct EvalExample {
  ModelInput<Real> input;
  std::vector<std::size_t> labels;
};

/// Supervised examples carry segment labels; weak examples carry only the
/// video-level label derived from them.
template <typename Real>
std::vector<TrainingExample<Real>> make_training_set(
    std::span<const FeatureSequence> videos, Setting setting);

template <typename Real>
std::vector<EvalExample<Real>> make_eval_set(std::span<const FeatureSequence> videos);

template <typename Real>
void add_params_into(ModelParams<Real>& dst, const ModelParams<Real>& src);

template <typename Real>
void scale_params(ModelParams<Real>& params, Real factor);

template <typename Real>
struct BatchGradient {
  double loss_sum = 0.0;
  ModelParams<Real> grads;  // summed, not averaged
};

template <typename Real>
BatchGradient<Real> batch_gradient_serial(const ModelParams<Real>& params,
                                          std::span<const TrainingExample<Real>> examples,
                                          std::span<const std::size_t> indices,
                                          InitMode mode, Real aux_weight);

template <typename Real>
BatchGradient<Real> batch_gradient_parallel(
    const ModelParams<Real>& params, std::span<const TrainingExample<Real>> examples,
    std::span<const std::size_t> indices, InitMode mode, Real aux_weight);

/// Per-video segment predictions.
template <typename Real>
std::vector<std::vector<std::size_t>> predict_all(const ModelParams<Real>& params,
                                                  InitMode mode,
                                                  std::span<const EvalExample<Real>> examples,
                                                  bool parallel);

}  // namespace avsdn
