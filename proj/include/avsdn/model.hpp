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

// The full audio-visual sequence-to-sequence network: one LSTM encoder per
// modality, residual fusion of their final states, and a decoder LSTM that
// starts from the fused state and reads the concatenated per-segment features.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "avsdn/fusion.hpp"
#include "avsdn/lstm.hpp"
#include "avsdn/rng.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

/// How the decoder's initial state is formed.
enum class InitMode {
  fusion,        // residual fusion of both encoders
  visual_only,   // visual encoder's final state
  audio_only,    // audio encoder's final state
  label_guided,  // sum of both final states, each encoder also trained against
                 // the video label through its own small MLP
};

enum class Setting { supervised, weak };

const char* to_string(InitMode mode);
const char* to_string(Setting setting);
InitMode parse_init_mode(const std::string& text);
Setting parse_setting(const std::string& text);

struct ModelDims {
  std::size_t audio_dim = 0;
  std::size_t visual_dim = 0;
  std::size_t hidden = 0;
  std::size_t categories = 0;  // C; classes are 0..C-1 plus background C

  std::size_t num_classes() const { return categories + 1; }
  std::size_t background() const { return categories; }
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

template <typename Real>
struct TensorRef {
  std::string name;
  std::span<Real> values;
};

template <typename Real>
struct ModelParams {
  ModelDims dims;
  LstmParams<Real> enc_audio;
  LstmParams<Real> enc_visual;
  FusionParams<Real> fusion;
  LstmParams<Real> decoder;
  Matrix<Real> out_w;  // (C+1) x hidden
  Vector<Real> out_b;
  Mlp<Real> aux_audio;   // label_guided only
  Mlp<Real> aux_visual;  // label_guided only

  static ModelParams zeros(const ModelDims& dims);
  static ModelParams initialize(const ModelDims& dims, Xorshift64Star& rng);

  /// Every parameter tensor in checkpoint order.
  std::vector<TensorRef<Real>> tensors();
  std::vector<TensorRef<const Real>> tensors() const;
  std::size_t parameter_count() const;

  template <typename Other>
  ModelParams<Other> cast() const {
    auto out = ModelParams<Other>::zeros(dims);
    auto src = tensors();
    auto dst = out.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (std::size_t k = 0; k < src[i].values.size(); ++k) {
        dst[i].values[k] = static_cast<Other>(src[i].values[k]);
      }
    }
    return out;
  }
};

/// Per-segment features for one video, converted to the working precision.
template <typename Real>
struct ModelInput {
  Matrix<Real> audio;   // T x d_a
  Matrix<Real> visual;  // T x d_v

  std::size_t steps() const { return audio.rows(); }
};

/// Per-segment class indices; index C is background.
class SegmentLabels {
 public:
  SegmentLabels() = default;
  SegmentLabels(std::vector<std::size_t> classes, std::size_t num_classes);

  /// Throws std::invalid_argument unless every vector has exactly one entry
  /// equal to 1 and all others 0.
  template <typename Real>
  static SegmentLabels from_one_hot(std::span<const Vector<Real>> one_hot);

  std::size_t size() const { return classes_.size(); }
  std::size_t operator[](std::size_t t) const { return classes_[t]; }
  const std::vector<std::size_t>& classes() const { return classes_; }
  std::size_t num_classes() const { return num_classes_; }

 private:
  std::vector<std::size_t> classes_;
  std::size_t num_classes_ = 0;
};

/// Video-level label: mean of the segment one-hots.
template <typename Real>
struct VideoLabel {
  Vector<Real> values;
};

template <typename Real>
VideoLabel<Real> video_label_from_segments(const SegmentLabels& labels);

template <typename Real>
struct AuxTrace {
  MlpTrace<Real> audio;
  MlpTrace<Real> visual;
  Vector<Real> audio_probs;
  Vector<Real> visual_probs;
};

template <typename Real>
struct PredictionTrace {
  InitMode mode = InitMode::fusion;
  std::optional<EncoderTrace<Real>> audio;   // absent for visual_only
  std::optional<EncoderTrace<Real>> visual;  // absent for audio_only
  LstmState<Real> audio_final;
  LstmState<Real> visual_final;
  std::optional<FusionTrace<Real>> fusion;
  LstmState<Real> decoder_initial;
  EncoderTrace<Real> decoder;
  std::vector<Vector<Real>> logits;
  std::vector<Vector<Real>> probs;
  Vector<Real> pooled_logits;
  Vector<Real> pooled_probs;
  std::optional<AuxTrace<Real>> aux;  // label_guided only

  std::size_t steps() const { return logits.size(); }
};

template <typename Real>
PredictionTrace<Real> forward(const ModelParams<Real>& params,
                              const ModelInput<Real>& input, InitMode mode);

/// Elementwise mean of the per-segment logits.
template <typename Real>
Vector<Real> average_pool(std::span<const Vector<Real>> logits);

/// Loss value plus its gradient on every network output the loss touched.
template <typename Real>
struct LossGradient {
  Real loss = Real(0);
  std::vector<Vector<Real>> logits;  // d loss / d m_t
  Vector<Real> aux_audio;            // d loss / d aux logits (label_guided)
  Vector<Real> aux_visual;
};

/// Mean over segments of the categorical cross-entropy of softmax(m_t).
template <typename Real>
LossGradient<Real> supervised_loss(const PredictionTrace<Real>& trace,
                                   const SegmentLabels& labels);

/// Class-averaged binary cross-entropy of softmax(mean_t m_t) against Y.
template <typename Real>
LossGradient<Real> weak_loss(const PredictionTrace<Real>& trace,
                             const VideoLabel<Real>& label);

/// Adds the label_guided auxiliary term: `weight` times the class-averaged BCE
/// of each encoder's auxiliary prediction against Y.
template <typename Real>
void add_auxiliary_loss(const PredictionTrace<Real>& trace,
                        const VideoLabel<Real>& label, Real weight,
                        LossGradient<Real>& total);

/// Class-averaged BCE with log arguments clamped at 1e-12. Returns the loss
/// and writes d loss / d probs into `grad` when non-empty.
template <typename Real>
Real binary_cross_entropy(std::span<const Real> probs, std::span<const Real> target,
                          std::span<Real> grad);

template <typename Real>
ModelParams<Real> backward(const ModelParams<Real>& params,
                           const PredictionTrace<Real>& trace,
                           const LossGradient<Real>& grad);

/// Index of the largest entry; ties go to the lowest index.
template <typename Real>
std::size_t argmax(std::span<const Real> values);

template <typename Real>
std::vector<std::size_t> predict_segments(const PredictionTrace<Real>& trace);

/// What a training step may see for one video. The weak setting is only ever
/// handed a VideoLabel.
template <typename Real>
using Target = std::variant<SegmentLabels, VideoLabel<Real>>;

template <typename Real>
struct Objective {
  Real loss = Real(0);
  ModelParams<Real> grads;
};

/// Forward, loss for the target's setting (plus the auxiliary term under
/// label_guided) and full backward pass.
template <typename Real>
Objective<Real> evaluate_objective(const ModelParams<Real>& params,
                                   const ModelInput<Real>& input,
                                   const Target<Real>& target, InitMode mode,
                                   Real aux_weight);

}  // namespace avsdn
