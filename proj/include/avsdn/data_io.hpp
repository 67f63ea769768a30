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

// On-disk dataset layout and the synthetic dataset generator.
//
// Feature file ("AVSD"), one per video, all fields little-endian:
//
//   magic "AVSD" | u16 version (1)
//   u32 T | u32 d_a | u32 d_v | u32 C
//   T * d_a f32 audio features, segment-major
//   T * d_v f32 visual features, segment-major
//   T u16 segment labels, value C meaning background
//
// Manifest: text, `key=value` header lines (C, d_a, d_v, T, categories as a
// comma-separated list), then one `video_id<TAB>split<TAB>path` record per
// line. Paths are relative to the manifest's directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "avsdn/model.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

inline constexpr std::uint16_t kFeatureVersion = 1;

struct FeatureSequence {
  std::string video_id;
  std::size_t categories = 0;  // C
  Matrix<float> audio;         // T x d_a
  Matrix<float> visual;        // T x d_v
  std::vector<std::uint16_t> labels;

  std::size_t steps() const { return labels.size(); }
  SegmentLabels segment_labels() const;

  /// Throws std::invalid_argument if rows, label count or label range disagree.
  void validate() const;

  template <typename Real>
  ModelInput<Real> model_input() const;

  bool operator==(const FeatureSequence&) const = default;
};

void write_features(std::ostream& out, const FeatureSequence& seq);
void write_features(const std::filesystem::path& path, const FeatureSequence& seq);

/// Throws FormatError: bad_magic, version_mismatch, truncated (with the byte
/// offset), dimension_overflow or bad_value.
FeatureSequence read_features(std::istream& in, std::string video_id);
/// The video id is the file name without extension.
FeatureSequence read_features(const std::filesystem::path& path);

enum class Split { train, val, test };
const char* to_string(Split split);
Split parse_split(const std::string& text);

struct ManifestEntry {
  std::string video_id;
  Split split = Split::train;
  std::filesystem::path path;
};

struct DatasetManifest {
  std::size_t categories = 0;
  std::vector<std::string> category_names;
  std::size_t audio_dim = 0;
  std::size_t visual_dim = 0;
  std::size_t steps = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  /// C >= 1, one name per category, each video id listed once.
  void validate() const;
  std::vector<ManifestEntry> split(Split s) const;
  std::filesystem::path resolve(const ManifestEntry& e) const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

/// Reads every video of one split and checks it against the manifest dims.
std::vector<FeatureSequence> load_split(const DatasetManifest& m, Split s);

/// `key=value` lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t categories = 4;
  std::size_t audio_dim = 16;
  std::size_t visual_dim = 24;
  std::size_t steps = 10;
  std::size_t train_videos = 200;
  std::size_t val_videos = 50;
  std::size_t test_videos = 50;
  double noise_sigma = 0.5;
  double prototype_scale = 1.0;
  /// Per in-event segment: probability that one modality shows background,
  /// which makes the segment's label background.
  double background_overlap = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Keys: C, d_a, d_v, T, train, val, test, noise_sigma, prototype_scale,
/// background_overlap, seed. Unknown keys are an error.
SynthConfig synth_config_from(const std::map<std::string, std::string>& kv,
                              SynthConfig base = {});

/// Orthogonal per-class prototypes (rows 0..C-1 events, row C background),
/// each of norm sqrt(d), one set per modality.
struct Prototypes {
  Matrix<double> audio;
  Matrix<double> visual;
};

struct SyntheticVideo {
  Split split = Split::train;
  FeatureSequence features;
};

struct SyntheticDataset {
  Prototypes prototypes;
  std::vector<SyntheticVideo> videos;
};

/// Pure function of the config. Throws std::invalid_argument when C + 1
/// exceeds min(d_a, d_v), the number of orthogonal prototypes available.
SyntheticDataset generate_synthetic_videos(const SynthConfig& cfg);

/// Writes `<out_dir>/features/<id>.avsd` for every video and
/// `<out_dir>/manifest.txt`; returns the manifest.
DatasetManifest generate_synthetic(const SynthConfig& cfg,
                                   const std::filesystem::path& out_dir);

/// Fraction of positions where prediction equals label.
double frame_accuracy(std::span<const std::size_t> predictions,
                      std::span<const std::size_t> labels);

}  // namespace avsdn
