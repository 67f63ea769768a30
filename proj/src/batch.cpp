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

#include "avsdn/batch.hpp"

#include <optional>
#include <stdexcept>

namespace avsdn {

template <typename Real>
std::vector<TrainingExample<Real>> make_training_set(
    std::span<const FeatureSequence> videos, Setting setting) {
  std::vector<TrainingExample<Real>> out;
  out.reserve(videos.size());
  for (const auto& v : videos) {
    auto labels = v.segment_labels();
    if (setting == Setting::supervised) {
      out.push_back({v.model_input<Real>(), Target<Real>(std::move(labels))});
    } else {
      out.push_back({v.model_input<Real>(),
                     Target<Real>(video_label_from_segments<Real>(labels))});
    }
  }
  return out;
}

template <typename Real>
std::vector<EvalExample<Real>> make_eval_set(std::span<const FeatureSequence> videos) {
  std::vector<EvalExample<Real>> out;
  out.reserve(videos.size());
  for (const auto& v : videos) {
    out.push_back({v.model_input<Real>(),
                   std::vector<std::size_t>(v.labels.begin(), v.labels.end())});
  }
  return out;
}

template <typename Real>
void add_params_into(ModelParams<Real>& dst, const ModelParams<Real>& src) {
  if (!(dst.dims == src.dims)) throw ShapeError("add_params_into: dims differ");
  auto d = dst.tensors();
  const auto s = src.tensors();
  for (std::size_t i = 0; i < d.size(); ++i) add_into<Real>(d[i].values, s[i].values);
}

template <typename Real>
void scale_params(ModelParams<Real>& params, Real factor) {
  for (auto& t : params.tensors()) scale_into<Real>(t.values, factor);
}

namespace {

template <typename Real>
void check_indices(std::span<const std::size_t> indices, std::size_t n) {
  for (const auto i : indices) {
    if (i >= n) {
      throw std::out_of_range("batch index " + std::to_string(i) + " of " +
                              std::to_string(n) + " examples");
    }
  }
}

}  // namespace

template <typename Real>
BatchGradient<Real> batch_gradient_serial(const ModelParams<Real>& params,
                                          std::span<const TrainingExample<Real>> examples,
                                          std::span<const std::size_t> indices,
                                          InitMode mode, Real aux_weight) {
  check_indices<Real>(indices, examples.size());
  BatchGradient<Real> out{0.0, ModelParams<Real>::zeros(params.dims)};
  for (const auto i : indices) {
    const auto obj = evaluate_objective(params, examples[i].input, examples[i].target,
                                        mode, aux_weight);
    out.loss_sum += static_cast<double>(obj.loss);
    add_params_into(out.grads, obj.grads);
  }
  return out;
}

template <typename Real>
BatchGradient<Real> batch_gradient_parallel(
    const ModelParams<Real>& params, std::span<const TrainingExample<Real>> examples,
    std::span<const std::size_t> indices, InitMode mode, Real aux_weight) {
  check_indices<Real>(indices, examples.size());
  const auto n = static_cast<std::ptrdiff_t>(indices.size());
  std::vector<std::optional<Objective<Real>>> slots(indices.size());
  std::vector<std::string> errors(indices.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto slot = static_cast<std::size_t>(k);
    const auto& ex = examples[indices[slot]];
    try {
      slots[slot] = evaluate_objective(params, ex.input, ex.target, mode, aux_weight);
    } catch (const std::exception& e) {
      errors[slot] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  BatchGradient<Real> out{0.0, ModelParams<Real>::zeros(params.dims)};
  for (const auto& obj : slots) {
    out.loss_sum += static_cast<double>(obj->loss);
    add_params_into(out.grads, obj->grads);
  }
  return out;
}

template <typename Real>
std::vector<std::vector<std::size_t>> predict_all(const ModelParams<Real>& params,
                                                  InitMode mode,
                                                  std::span<const EvalExample<Real>> examples,
                                                  bool parallel) {
  std::vector<std::vector<std::size_t>> out(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  std::vector<std::string> errors(examples.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      out[i] = predict_segments(forward(params, examples[i].input, mode));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return out;
}

#define AVSDN_INSTANTIATE_BATCH(Real)                                                \
  template std::vector<TrainingExample<Real>> make_training_set(                     \
      std::span<const FeatureSequence>, Setting);                                    \
  template std::vector<EvalExample<Real>> make_eval_set(                             \
      std::span<const FeatureSequence>);                                             \
  template void add_params_into(ModelParams<Real>&, const ModelParams<Real>&);       \
  template void scale_params(ModelParams<Real>&, Real);                              \
  template BatchGradient<Real> batch_gradient_serial(                                \
      const ModelParams<Real>&, std::span<const TrainingExample<Real>>,              \
      std::span<const std::size_t>, InitMode, Real);                                 \
  template BatchGradient<Real> batch_gradient_parallel(                              \
      const ModelParams<Real>&, std::span<const TrainingExample<Real>>,              \
      std::span<const std::size_t>, InitMode, Real);                                 \
  template std::vector<std::vector<std::size_t>> predict_all(                        \
      const ModelParams<Real>&, InitMode, std::span<const EvalExample<Real>>, bool);

AVSDN_INSTANTIATE_BATCH(float)
AVSDN_INSTANTIATE_BATCH(double)

}  // namespace avsdn
