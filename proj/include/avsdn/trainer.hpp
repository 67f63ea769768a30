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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avsdn/batch.hpp"
#include "avsdn/model.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::optional<double> clip_norm = 5.0;  // global L2 norm
};

template <typename Real>
struct AdamState {
  ModelParams<Real> first_moment;
  ModelParams<Real> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros(const ModelDims& dims) {
    return {ModelParams<Real>::zeros(dims), ModelParams<Real>::zeros(dims), 0};
  }
};

class NonFiniteGradientError : public std::runtime_error {
 public:
  explicit NonFiniteGradientError(const std::string& tensor)
      : std::runtime_error("non-finite gradient in tensor '" + tensor + "'"),
        tensor_(tensor) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

template <typename Real>
double global_norm(const ModelParams<Real>& grads);

/// Clips `grads` (in place) to the configured global norm, then applies one
/// bias-corrected Adam update. Throws NonFiniteGradientError before touching
/// anything if a gradient entry is NaN or infinite.
template <typename Real>
void adam_step(ModelParams<Real>& params, ModelParams<Real>& grads,
               AdamState<Real>& state, const AdamConfig& cfg);

struct TrainConfig {
  Setting setting = Setting::supervised;
  InitMode init = InitMode::fusion;
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 1;
  std::size_t hidden = 128;
  Precision precision = Precision::standard;
  double aux_weight = 1.0;   // label_guided auxiliary loss weight
  std::size_t patience = 20;  // 0 disables early stopping
  bool parallel = false;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

template <typename Real>
struct TrainResult {
  ModelParams<Real> params;  // best by selection accuracy
  std::vector<EpochLog> epochs;
  double best_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

/// Trains from a seeded initialization. After each epoch the model is scored
/// on `selection` (frame accuracy); the best-scoring parameters are kept, and
/// training stops early after `patience` epochs without improvement or once
/// selection accuracy reaches 1. When `log` is given, one
/// `epoch<TAB>loss<TAB>val_acc` line is written per epoch.
template <typename Real>
TrainResult<Real> train(const ModelDims& dims,
                        std::span<const TrainingExample<Real>> train_set,
                        std::span<const EvalExample<Real>> selection,
                        const TrainConfig& cfg, std::ostream* log = nullptr);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<std::size_t> correct;  // per ground-truth class, background last
  std::vector<std::size_t> total;
};

template <typename Real>
EvalReport evaluate(const ModelParams<Real>& params, InitMode mode,
                    std::span<const EvalExample<Real>> examples, bool parallel = false);

/// Overall accuracy with four decimals followed by a per-class table.
void print_report(std::ostream& out, const EvalReport& report,
                  const std::vector<std::string>& category_names);

struct GradcheckOptions {
  std::uint64_t seed = 1;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  ModelDims dims{5, 7, 4, 3};
  std::size_t steps = 4;
  bool zero_params = false;
};

struct GradcheckCase {
  Setting setting = Setting::supervised;
  InitMode mode = InitMode::fusion;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares the analytic gradient of both losses, for every decoder
/// initialization mode, against central differences on every parameter entry
/// of a small double-precision model. Relative error is
/// |analytic - numeric| / max(1, |numeric|).
GradcheckReport gradcheck(const GradcheckOptions& options);

void print_gradcheck(std::ostream& out, const GradcheckReport& report);

}  // namespace avsdn
