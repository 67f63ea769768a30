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

#include "avsdn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "avsdn/rng.hpp"

namespace avsdn {

template <typename Real>
double global_norm(const ModelParams<Real>& grads) {
  double sum = 0.0;
  for (const auto& t : grads.tensors()) {
    for (const Real v : t.values) sum += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sum);
}

template <typename Real>
void adam_step(ModelParams<Real>& params, ModelParams<Real>& grads,
               AdamState<Real>& state, const AdamConfig& cfg) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  if (p.size() != g.size() || !(params.dims == grads.dims) ||
      !(params.dims == state.first_moment.dims)) {
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  }
  for (const auto& t : g) {
    if (!all_finite<Real>(t.values)) throw NonFiniteGradientError(t.name);
  }
  if (cfg.clip_norm) {
    const double norm = global_norm(grads);
    if (norm > *cfg.clip_norm) scale_params(grads, static_cast<Real>(*cfg.clip_norm / norm));
  }

  ++state.step;
  const auto step = static_cast<double>(state.step);
  const Real b1 = static_cast<Real>(cfg.beta1);
  const Real b2 = static_cast<Real>(cfg.beta2);
  const Real correction1 = static_cast<Real>(1.0 - std::pow(cfg.beta1, step));
  const Real correction2 = static_cast<Real>(1.0 - std::pow(cfg.beta2, step));
  const Real lr = static_cast<Real>(cfg.learning_rate);
  const Real eps = static_cast<Real>(cfg.epsilon);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t k = 0; k < p[i].values.size(); ++k) {
      const Real gk = g[i].values[k];
      Real& mk = m[i].values[k];
      Real& vk = v[i].values[k];
      mk = b1 * mk + (Real(1) - b1) * gk;
      vk = b2 * vk + (Real(1) - b2) * gk * gk;
      const Real m_hat = mk / correction1;
      const Real v_hat = vk / correction2;
      p[i].values[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (hidden == 0) throw std::invalid_argument("hidden size must be at least 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (adam.clip_norm && !(*adam.clip_norm > 0.0)) {
    throw std::invalid_argument("clip norm must be > 0");
  }
  if (!(aux_weight >= 0.0)) throw std::invalid_argument("aux weight must be >= 0");
}

template <typename Real>
EvalReport evaluate(const ModelParams<Real>& params, InitMode mode,
                    std::span<const EvalExample<Real>> examples, bool parallel) {
  const auto predictions = predict_all(params, mode, examples, parallel);
  const std::size_t classes = params.dims.num_classes();
  EvalReport r;
  r.correct.assign(classes, 0);
  r.total.assign(classes, 0);
  std::vector<std::size_t> flat_pred;
  std::vector<std::size_t> flat_true;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& labels = examples[i].labels;
    if (predictions[i].size() != labels.size()) {
      throw std::invalid_argument("evaluate: prediction and label lengths differ");
    }
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (labels[t] >= classes) throw std::invalid_argument("evaluate: label out of range");
      ++r.total[labels[t]];
      r.correct[labels[t]] += predictions[i][t] == labels[t];
    }
    flat_pred.insert(flat_pred.end(), predictions[i].begin(), predictions[i].end());
    flat_true.insert(flat_true.end(), labels.begin(), labels.end());
  }
  r.accuracy = frame_accuracy(flat_pred, flat_true);
  return r;
}

void print_report(std::ostream& out, const EvalReport& report,
                  const std::vector<std::string>& category_names) {
  char line[256];
  std::snprintf(line, sizeof line, "accuracy\t%.4f\n", report.accuracy);
  out << line << "class\tname\tcorrect\ttotal\taccuracy\n";
  for (std::size_t k = 0; k < report.total.size(); ++k) {
    const std::string name = k < category_names.size() ? category_names[k] : "background";
    const double acc = report.total[k] == 0
                           ? 0.0
                           : static_cast<double>(report.correct[k]) /
                                 static_cast<double>(report.total[k]);
    std::snprintf(line, sizeof line, "%zu\t%s\t%zu\t%zu\t%.4f\n", k, name.c_str(),
                  report.correct[k], report.total[k], acc);
    out << line;
  }
}

template <typename Real>
TrainResult<Real> train(const ModelDims& dims,
                        std::span<const TrainingExample<Real>> train_set,
                        std::span<const EvalExample<Real>> selection,
                        const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (selection.empty()) throw std::invalid_argument("train: empty selection set");
  for (const auto& ex : train_set) {
    const bool weak = std::holds_alternative<VideoLabel<Real>>(ex.target);
    if (weak != (cfg.setting == Setting::weak)) {
      throw std::invalid_argument(std::string("train: example targets do not match the ") +
                                  to_string(cfg.setting) + " setting");
    }
  }

  Xorshift64Star rng(cfg.seed);
  auto params = ModelParams<Real>::initialize(dims, rng);
  auto adam = AdamState<Real>::zeros(dims);
  const Real aux_weight = static_cast<Real>(cfg.aux_weight);

  TrainResult<Real> result{params, {}, -1.0, 0};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      auto bg = cfg.parallel
                    ? batch_gradient_parallel(params, train_set, batch, cfg.init, aux_weight)
                    : batch_gradient_serial(params, train_set, batch, cfg.init, aux_weight);
      scale_params(bg.grads, Real(1) / static_cast<Real>(len));
      adam_step(params, bg.grads, adam, cfg.adam);
      loss_sum += bg.loss_sum;
    }
    const double loss = loss_sum / static_cast<double>(train_set.size());
    if (!std::isfinite(loss)) {
      throw std::runtime_error("training loss became non-finite at epoch " +
                               std::to_string(epoch));
    }
    const double acc = evaluate(params, cfg.init, selection, cfg.parallel).accuracy;
    result.epochs.push_back({epoch, loss, acc});
    if (log) {
      char line[128];
      std::snprintf(line, sizeof line, "%zu\t%.6f\t%.4f\n", epoch, loss, acc);
      *log << line << std::flush;
    }
    if (acc > result.best_accuracy) {
      result.best_accuracy = acc;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (acc >= 1.0) break;
    if (cfg.patience > 0 && since_best >= cfg.patience) break;
  }
  return result;
}

namespace {

double objective_loss(const ModelParams<double>& params, const ModelInput<double>& input,
                      const Target<double>& target, InitMode mode) {
  const auto trace = forward(params, input, mode);
  LossGradient<double> lg;
  std::optional<VideoLabel<double>> y;
  if (const auto* seg = std::get_if<SegmentLabels>(&target)) {
    lg = supervised_loss(trace, *seg);
    y = video_label_from_segments<double>(*seg);
  } else {
    y = std::get<VideoLabel<double>>(target);
    lg = weak_loss(trace, *y);
  }
  if (mode == InitMode::label_guided) add_auxiliary_loss(trace, *y, 1.0, lg);
  return lg.loss;
}

}  // namespace

GradcheckReport gradcheck(const GradcheckOptions& options) {
  Xorshift64Star rng(options.seed);
  const auto& dims = options.dims;
  auto params = ModelParams<double>::zeros(dims);
  if (!options.zero_params) {
    for (auto& t : params.tensors()) {
      for (auto& v : t.values) v = rng.uniform(-0.5, 0.5);
    }
  }
  ModelInput<double> input{Matrix<double>(options.steps, dims.audio_dim),
                           Matrix<double>(options.steps, dims.visual_dim)};
  for (auto& v : input.audio.span()) v = rng.uniform(-1.0, 1.0);
  for (auto& v : input.visual.span()) v = rng.uniform(-1.0, 1.0);
  std::vector<std::size_t> classes(options.steps);
  for (auto& c : classes) c = rng.below(dims.num_classes());
  const SegmentLabels labels(classes, dims.num_classes());

  GradcheckReport report;
  report.tolerance = options.tolerance;
  for (const auto setting : {Setting::supervised, Setting::weak}) {
    const Target<double> target =
        setting == Setting::supervised
            ? Target<double>(labels)
            : Target<double>(video_label_from_segments<double>(labels));
    for (const auto mode : {InitMode::fusion, InitMode::visual_only, InitMode::audio_only,
                            InitMode::label_guided}) {
      GradcheckCase c{setting, mode, 0, 0.0, {}, 0};
      const auto analytic = evaluate_objective(params, input, target, mode, 1.0).grads;
      auto probe = params;
      auto probe_tensors = probe.tensors();
      const auto grad_tensors = analytic.tensors();
      for (std::size_t i = 0; i < probe_tensors.size(); ++i) {
        auto values = probe_tensors[i].values;
        for (std::size_t k = 0; k < values.size(); ++k) {
          const double saved = values[k];
          values[k] = saved + options.epsilon;
          const double up = objective_loss(probe, input, target, mode);
          values[k] = saved - options.epsilon;
          const double down = objective_loss(probe, input, target, mode);
          values[k] = saved;
          const double numeric = (up - down) / (2.0 * options.epsilon);
          const double err = std::abs(grad_tensors[i].values[k] - numeric) /
                             std::max(1.0, std::abs(numeric));
          ++c.entries;
          if (c.worst_tensor.empty() || err > c.max_rel_error) {
            c.max_rel_error = err;
            c.worst_tensor = probe_tensors[i].name;
            c.worst_index = k;
          }
        }
      }
      report.max_rel_error = std::max(report.max_rel_error, c.max_rel_error);
      report.cases.push_back(std::move(c));
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

void print_gradcheck(std::ostream& out, const GradcheckReport& report) {
  char line[256];
  for (const auto& c : report.cases) {
    std::snprintf(line, sizeof line, "%s\t%s\tentries=%zu\tmax_rel_error=%.3e\tworst=%s[%zu]\n",
                  to_string(c.setting), to_string(c.mode), c.entries, c.max_rel_error,
                  c.worst_tensor.c_str(), c.worst_index);
    out << line;
  }
  std::snprintf(line, sizeof line, "max_rel_error\t%.3e\ttolerance\t%.1e\t%s\n",
                report.max_rel_error, report.tolerance, report.passed ? "PASS" : "FAIL");
  out << line;
}

#define AVSDN_INSTANTIATE_TRAINER(Real)                                              \
  template double global_norm(const ModelParams<Real>&);                             \
  template void adam_step(ModelParams<Real>&, ModelParams<Real>&, AdamState<Real>&,  \
                          const AdamConfig&);                                        \
  template TrainResult<Real> train(const ModelDims&,                                 \
                                   std::span<const TrainingExample<Real>>,           \
                                   std::span<const EvalExample<Real>>,               \
                                   const TrainConfig&, std::ostream*);               \
  template EvalReport evaluate(const ModelParams<Real>&, InitMode,                   \
                               std::span<const EvalExample<Real>>, bool);

AVSDN_INSTANTIATE_TRAINER(float)
AVSDN_INSTANTIATE_TRAINER(double)

}  // namespace avsdn
