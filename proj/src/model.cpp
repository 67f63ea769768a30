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

#include "avsdn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace avsdn {

const char* to_string(InitMode mode) {
  switch (mode) {
    case InitMode::fusion: return "fusion";
    case InitMode::visual_only: return "visual_only";
    case InitMode::audio_only: return "audio_only";
    case InitMode::label_guided: return "label_guided";
  }
  return "?";
}

const char* to_string(Setting setting) {
  return setting == Setting::supervised ? "supervised" : "weak";
}

InitMode parse_init_mode(const std::string& text) {
  for (auto m : {InitMode::fusion, InitMode::visual_only, InitMode::audio_only,
                 InitMode::label_guided}) {
    if (text == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown init mode '" + text + "'");
}

Setting parse_setting(const std::string& text) {
  if (text == "supervised") return Setting::supervised;
  if (text == "weak") return Setting::weak;
  throw std::invalid_argument("unknown setting '" + text + "'");
}

void ModelDims::validate() const {
  if (audio_dim == 0 || visual_dim == 0 || hidden == 0 || categories == 0) {
    throw ShapeError("model dims must be positive (d_a " + std::to_string(audio_dim) +
                     ", d_v " + std::to_string(visual_dim) + ", h " +
                     std::to_string(hidden) + ", C " + std::to_string(categories) + ")");
  }
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::zeros(const ModelDims& dims) {
  dims.validate();
  const std::size_t h = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.enc_audio = LstmParams<Real>::zeros(dims.audio_dim, h);
  p.enc_visual = LstmParams<Real>::zeros(dims.visual_dim, h);
  p.fusion = FusionParams<Real>::zeros(h);
  p.decoder = LstmParams<Real>::zeros(dims.audio_dim + dims.visual_dim, h);
  p.out_w = Matrix<Real>(dims.num_classes(), h);
  p.out_b = Vector<Real>(dims.num_classes());
  p.aux_audio = Mlp<Real>::zeros(h, h, dims.num_classes());
  p.aux_visual = Mlp<Real>::zeros(h, h, dims.num_classes());
  return p;
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::initialize(const ModelDims& dims,
                                                Xorshift64Star& rng) {
  dims.validate();
  const std::size_t h = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.enc_audio = LstmParams<Real>::xavier(dims.audio_dim, h, rng);
  p.enc_visual = LstmParams<Real>::xavier(dims.visual_dim, h, rng);
  p.fusion = FusionParams<Real>::xavier(h, rng);
  p.decoder = LstmParams<Real>::xavier(dims.audio_dim + dims.visual_dim, h, rng);
  p.out_w = Matrix<Real>(dims.num_classes(), h);
  xavier_uniform(p.out_w.span(), h, dims.num_classes(), rng);
  p.out_b = Vector<Real>(dims.num_classes());
  p.aux_audio = Mlp<Real>::xavier(h, h, dims.num_classes(), rng);
  p.aux_visual = Mlp<Real>::xavier(h, h, dims.num_classes(), rng);
  return p;
}

namespace {

template <typename Self, typename Fn>
void visit_tensors(Self& p, Fn&& fn) {
  auto lstm = [&](const std::string& prefix, auto& params) {
    for (std::size_t k = 0; k < kGateCount; ++k) {
      const std::string g = prefix + "." + gate_name(k);
      fn(g + ".W", params.gates[k].w.span());
      fn(g + ".U", params.gates[k].u.span());
      fn(g + ".b", params.gates[k].b.span());
    }
  };
  auto mlp = [&](const std::string& prefix, auto& m) {
    fn(prefix + ".W1", m.w1.span());
    fn(prefix + ".b1", m.b1.span());
    fn(prefix + ".W2", m.w2.span());
    fn(prefix + ".b2", m.b2.span());
  };
  lstm("enc_audio", p.enc_audio);
  lstm("enc_visual", p.enc_visual);
  mlp("fusion.hidden", p.fusion.hidden_mlp);
  mlp("fusion.cell", p.fusion.cell_mlp);
  lstm("decoder", p.decoder);
  fn(std::string("out.W"), p.out_w.span());
  fn(std::string("out.b"), p.out_b.span());
  mlp("aux_audio", p.aux_audio);
  mlp("aux_visual", p.aux_visual);
}

}  // namespace

template <typename Real>
std::vector<TensorRef<Real>> ModelParams<Real>::tensors() {
  std::vector<TensorRef<Real>> out;
  visit_tensors(*this, [&](std::string name, std::span<Real> values) {
    out.push_back({std::move(name), values});
  });
  return out;
}

template <typename Real>
std::vector<TensorRef<const Real>> ModelParams<Real>::tensors() const {
  std::vector<TensorRef<const Real>> out;
  visit_tensors(*this, [&](std::string name, std::span<const Real> values) {
    out.push_back({std::move(name), values});
  });
  return out;
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.values.size();
  return n;
}

SegmentLabels::SegmentLabels(std::vector<std::size_t> classes, std::size_t num_classes)
    : classes_(std::move(classes)), num_classes_(num_classes) {
  for (std::size_t t = 0; t < classes_.size(); ++t) {
    if (classes_[t] >= num_classes_) {
      throw std::invalid_argument("segment " + std::to_string(t) + " has class " +
                                  std::to_string(classes_[t]) + " outside [0, " +
                                  std::to_string(num_classes_) + ")");
    }
  }
}

template <typename Real>
SegmentLabels SegmentLabels::from_one_hot(std::span<const Vector<Real>> one_hot) {
  if (one_hot.empty()) return {};
  const std::size_t k = one_hot[0].size();
  std::vector<std::size_t> classes;
  classes.reserve(one_hot.size());
  for (std::size_t t = 0; t < one_hot.size(); ++t) {
    const auto& y = one_hot[t];
    if (y.size() != k) {
      throw std::invalid_argument("segment " + std::to_string(t) + " label has " +
                                  std::to_string(y.size()) + " classes, expected " +
                                  std::to_string(k));
    }
    std::size_t ones = 0;
    std::size_t hot = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (y[i] == Real(1)) {
        ++ones;
        hot = i;
      } else if (y[i] != Real(0)) {
        ones = 2;
        break;
      }
    }
    if (ones != 1) {
      throw std::invalid_argument("segment " + std::to_string(t) +
                                  " label is not one-hot");
    }
    classes.push_back(hot);
  }
  return SegmentLabels(std::move(classes), k);
}

template <typename Real>
VideoLabel<Real> video_label_from_segments(const SegmentLabels& labels) {
  if (labels.size() == 0) {
    throw std::invalid_argument("video label of an empty segment sequence");
  }
  Vector<Real> y(labels.num_classes());
  for (std::size_t t = 0; t < labels.size(); ++t) y[labels[t]] += Real(1);
  const auto count = static_cast<Real>(labels.size());
  for (auto& v : y) v /= count;
  return {std::move(y)};
}

template <typename Real>
Vector<Real> average_pool(std::span<const Vector<Real>> logits) {
  if (logits.empty()) throw std::invalid_argument("average_pool of zero segments");
  Vector<Real> mean(logits[0].size());
  for (const auto& m : logits) add_into<Real>(mean.span(), m);
  const auto count = static_cast<Real>(logits.size());
  for (auto& v : mean) v /= count;
  return mean;
}

template <typename Real>
PredictionTrace<Real> forward(const ModelParams<Real>& params,
                              const ModelInput<Real>& input, InitMode mode) {
  const auto& dims = params.dims;
  const std::size_t steps = input.audio.rows();
  if (steps == 0) throw std::invalid_argument("forward: video has no segments");
  if (input.visual.rows() != steps) {
    throw ShapeError("forward: " + std::to_string(steps) + " audio segments vs " +
                     std::to_string(input.visual.rows()) + " visual segments");
  }
  if (input.audio.cols() != dims.audio_dim || input.visual.cols() != dims.visual_dim) {
    throw ShapeError("forward: features " + shape_string(input.audio) + " / " +
                     shape_string(input.visual) + " vs model d_a=" +
                     std::to_string(dims.audio_dim) +
                     ", d_v=" + std::to_string(dims.visual_dim));
  }

  PredictionTrace<Real> tr;
  tr.mode = mode;
  const std::size_t h = dims.hidden;
  tr.audio_final = LstmState<Real>::zeros(h);
  tr.visual_final = LstmState<Real>::zeros(h);
  if (mode != InitMode::visual_only) {
    auto enc = encode_sequence(params.enc_audio, input.audio, steps);
    tr.audio_final = std::move(enc.state);
    tr.audio = std::move(enc.trace);
  }
  if (mode != InitMode::audio_only) {
    auto enc = encode_sequence(params.enc_visual, input.visual, steps);
    tr.visual_final = std::move(enc.state);
    tr.visual = std::move(enc.trace);
  }

  switch (mode) {
    case InitMode::fusion: {
      auto fused = fuse(params.fusion, tr.audio_final, tr.visual_final);
      tr.decoder_initial = std::move(fused.fused);
      tr.fusion = std::move(fused.trace);
      break;
    }
    case InitMode::visual_only:
      tr.decoder_initial = tr.visual_final;
      break;
    case InitMode::audio_only:
      tr.decoder_initial = tr.audio_final;
      break;
    case InitMode::label_guided: {
      tr.decoder_initial = {add<Real>(tr.audio_final.h, tr.visual_final.h),
                            add<Real>(tr.audio_final.c, tr.visual_final.c)};
      AuxTrace<Real> aux;
      aux.audio = mlp_forward<Real>(params.aux_audio, tr.audio_final.h);
      aux.visual = mlp_forward<Real>(params.aux_visual, tr.visual_final.h);
      aux.audio_probs = softmax<Real>(aux.audio.output);
      aux.visual_probs = softmax<Real>(aux.visual.output);
      tr.aux = std::move(aux);
      break;
    }
  }

  Matrix<Real> joint(steps, dims.audio_dim + dims.visual_dim);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = concat<Real>(input.audio.row(t), input.visual.row(t));
    std::copy(row.begin(), row.end(), joint.row(t).begin());
  }
  auto dec = run_sequence(params.decoder, tr.decoder_initial, joint);
  tr.decoder = std::move(dec.trace);

  tr.logits.reserve(steps);
  tr.probs.reserve(steps);
  for (const auto& s : tr.decoder.steps) {
    Vector<Real> m = params.out_b;
    matvec_accumulate<Real>(params.out_w, s.h, m.span());
    tr.probs.push_back(softmax<Real>(m));
    tr.logits.push_back(std::move(m));
  }
  tr.pooled_logits = average_pool<Real>(tr.logits);
  tr.pooled_probs = softmax<Real>(tr.pooled_logits);
  return tr;
}

namespace {

constexpr double kLogClamp = 1e-12;

template <typename Real>
void check_video_label(const VideoLabel<Real>& label, std::size_t num_classes) {
  if (label.values.size() != num_classes) {
    throw std::invalid_argument("video label has " + std::to_string(label.values.size()) +
                                " classes, model has " + std::to_string(num_classes));
  }
  for (const Real y : label.values) {
    if (!(y >= Real(0) && y <= Real(1))) {
      throw std::invalid_argument("video label entry " + std::to_string(y) +
                                  " outside [0, 1]");
    }
  }
}

}  // namespace

template <typename Real>
Real binary_cross_entropy(std::span<const Real> probs, std::span<const Real> target,
                          std::span<Real> grad) {
  if (probs.size() != target.size() || (!grad.empty() && grad.size() != probs.size())) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(probs.size()) +
                     " probabilities vs " + std::to_string(target.size()) + " targets");
  }
  const Real clamp = static_cast<Real>(kLogClamp);
  const Real inv_k = Real(1) / static_cast<Real>(probs.size());
  Real total = Real(0);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const Real p = probs[k];
    const Real q = Real(1) - p;
    const Real y = target[k];
    total += y * std::log(std::max(p, clamp)) + (Real(1) - y) * std::log(std::max(q, clamp));
    if (!grad.empty()) {
      Real d = Real(0);
      if (p > clamp) d -= y / p;
      if (q > clamp) d += (Real(1) - y) / q;
      grad[k] = d * inv_k;
    }
  }
  return -total * inv_k;
}

template <typename Real>
LossGradient<Real> supervised_loss(const PredictionTrace<Real>& trace,
                                   const SegmentLabels& labels) {
  const std::size_t steps = trace.steps();
  if (labels.size() != steps) {
    throw std::invalid_argument("supervised_loss: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(steps) + " segments");
  }
  const std::size_t classes = trace.pooled_logits.size();
  if (labels.num_classes() != classes) {
    throw std::invalid_argument("supervised_loss: labels over " +
                                std::to_string(labels.num_classes()) +
                                " classes, model has " + std::to_string(classes));
  }
  const Real clamp = static_cast<Real>(kLogClamp);
  const Real inv_t = Real(1) / static_cast<Real>(steps);
  LossGradient<Real> out;
  out.logits.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& p = trace.probs[t];
    out.loss -= std::log(std::max(p[labels[t]], clamp));
    Vector<Real> g = p;
    g[labels[t]] -= Real(1);
    scale_into<Real>(g.span(), inv_t);
    out.logits.push_back(std::move(g));
  }
  out.loss *= inv_t;
  return out;
}

template <typename Real>
LossGradient<Real> weak_loss(const PredictionTrace<Real>& trace,
                             const VideoLabel<Real>& label) {
  const std::size_t steps = trace.steps();
  check_video_label(label, trace.pooled_probs.size());
  LossGradient<Real> out;
  Vector<Real> d_probs(trace.pooled_probs.size());
  out.loss = binary_cross_entropy<Real>(trace.pooled_probs, label.values, d_probs.span());
  Vector<Real> d_pooled = softmax_grad<Real>(trace.pooled_probs, d_probs);
  scale_into<Real>(d_pooled.span(), Real(1) / static_cast<Real>(steps));
  out.logits.assign(steps, d_pooled);
  return out;
}

template <typename Real>
void add_auxiliary_loss(const PredictionTrace<Real>& trace,
                        const VideoLabel<Real>& label, Real weight,
                        LossGradient<Real>& total) {
  if (!trace.aux) throw std::logic_error("auxiliary loss needs a label_guided trace");
  check_video_label(label, trace.aux->audio_probs.size());
  auto one = [&](const Vector<Real>& probs, Vector<Real>& grad_out) {
    Vector<Real> d_probs(probs.size());
    const Real loss = binary_cross_entropy<Real>(probs, label.values, d_probs.span());
    grad_out = softmax_grad<Real>(probs, d_probs);
    scale_into<Real>(grad_out.span(), weight);
    return weight * loss;
  };
  total.loss += one(trace.aux->audio_probs, total.aux_audio);
  total.loss += one(trace.aux->visual_probs, total.aux_visual);
}

template <typename Real>
ModelParams<Real> backward(const ModelParams<Real>& params,
                           const PredictionTrace<Real>& trace,
                           const LossGradient<Real>& grad) {
  const std::size_t steps = trace.steps();
  if (grad.logits.size() != steps) {
    throw ShapeError("backward: " + std::to_string(grad.logits.size()) +
                     " logit gradients for " + std::to_string(steps) + " segments");
  }
  auto g = ModelParams<Real>::zeros(params.dims);
  const std::size_t h = params.dims.hidden;

  std::vector<Vector<Real>> d_hidden(steps, Vector<Real>(h));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& dm = grad.logits[t];
    const auto& ht = trace.decoder.steps[t].h;
    outer_accumulate<Real>(g.out_w, dm, ht);
    add_into<Real>(g.out_b.span(), dm);
    matvec_transposed_accumulate<Real>(params.out_w, dm, d_hidden[t].span());
  }

  auto dec = lstm_backward<Real>(params.decoder, trace.decoder, d_hidden,
                                 LstmState<Real>::zeros(h));
  g.decoder = std::move(dec.params);

  LstmState<Real> d_audio = LstmState<Real>::zeros(h);
  LstmState<Real> d_visual = LstmState<Real>::zeros(h);
  switch (trace.mode) {
    case InitMode::fusion: {
      auto fg = fuse_backward<Real>(*trace.fusion, params.fusion, dec.initial);
      g.fusion = std::move(fg.params);
      d_audio = std::move(fg.audio);
      d_visual = std::move(fg.visual);
      break;
    }
    case InitMode::visual_only:
      d_visual = dec.initial;
      break;
    case InitMode::audio_only:
      d_audio = dec.initial;
      break;
    case InitMode::label_guided:
      d_audio = dec.initial;
      d_visual = dec.initial;
      if (!grad.aux_audio.empty()) {
        add_into<Real>(d_audio.h.span(),
                       mlp_backward<Real>(params.aux_audio, trace.aux->audio,
                                          grad.aux_audio, g.aux_audio));
      }
      if (!grad.aux_visual.empty()) {
        add_into<Real>(d_visual.h.span(),
                       mlp_backward<Real>(params.aux_visual, trace.aux->visual,
                                          grad.aux_visual, g.aux_visual));
      }
      break;
  }

  if (trace.audio) {
    g.enc_audio = encode_backward<Real>(*trace.audio, params.enc_audio, d_audio).params;
  }
  if (trace.visual) {
    g.enc_visual = encode_backward<Real>(*trace.visual, params.enc_visual, d_visual).params;
  }
  return g;
}

template <typename Real>
std::size_t argmax(std::span<const Real> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename Real>
std::vector<std::size_t> predict_segments(const PredictionTrace<Real>& trace) {
  std::vector<std::size_t> out;
  out.reserve(trace.probs.size());
  for (const auto& p : trace.probs) out.push_back(argmax<Real>(p));
  return out;
}

template <typename Real>
Objective<Real> evaluate_objective(const ModelParams<Real>& params,
                                   const ModelInput<Real>& input,
                                   const Target<Real>& target, InitMode mode,
                                   Real aux_weight) {
  const auto trace = forward(params, input, mode);
  LossGradient<Real> lg;
  const VideoLabel<Real>* video_label = nullptr;
  std::optional<VideoLabel<Real>> derived;
  if (const auto* segments = std::get_if<SegmentLabels>(&target)) {
    lg = supervised_loss(trace, *segments);
    if (mode == InitMode::label_guided) {
      derived = video_label_from_segments<Real>(*segments);
      video_label = &*derived;
    }
  } else {
    video_label = &std::get<VideoLabel<Real>>(target);
    lg = weak_loss(trace, *video_label);
  }
  if (mode == InitMode::label_guided) {
    add_auxiliary_loss(trace, *video_label, aux_weight, lg);
  }
  return {lg.loss, backward(params, trace, lg)};
}

#define AVSDN_INSTANTIATE_MODEL(Real)                                             \
  template struct ModelParams<Real>;                                              \
  template SegmentLabels SegmentLabels::from_one_hot(std::span<const Vector<Real>>); \
  template VideoLabel<Real> video_label_from_segments(const SegmentLabels&);      \
  template Vector<Real> average_pool(std::span<const Vector<Real>>);              \
  template PredictionTrace<Real> forward(const ModelParams<Real>&,                \
                                         const ModelInput<Real>&, InitMode);      \
  template Real binary_cross_entropy(std::span<const Real>, std::span<const Real>, \
                                     std::span<Real>);                            \
  template LossGradient<Real> supervised_loss(const PredictionTrace<Real>&,       \
                                              const SegmentLabels&);              \
  template LossGradient<Real> weak_loss(const PredictionTrace<Real>&,             \
                                        const VideoLabel<Real>&);                 \
  template void add_auxiliary_loss(const PredictionTrace<Real>&,                  \
                                   const VideoLabel<Real>&, Real,                 \
                                   LossGradient<Real>&);                          \
  template ModelParams<Real> backward(const ModelParams<Real>&,                   \
                                      const PredictionTrace<Real>&,               \
                                      const LossGradient<Real>&);                 \
  template std::size_t argmax(std::span<const Real>);                             \
  template std::vector<std::size_t> predict_segments(const PredictionTrace<Real>&); \
  template Objective<Real> evaluate_objective(const ModelParams<Real>&,           \
                                              const ModelInput<Real>&,            \
                                              const Target<Real>&, InitMode, Real);

AVSDN_INSTANTIATE_MODEL(float)
AVSDN_INSTANTIATE_MODEL(double)

}  // namespace avsdn
