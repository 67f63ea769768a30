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

#include "avsdn/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "avsdn/binary_format.hpp"
#include "avsdn/rng.hpp"

namespace avsdn {

namespace {

constexpr std::string_view kFeatureMagic = "AVSD";
constexpr std::uint64_t kMaxDim = 1u << 24;
constexpr std::uint64_t kMaxValues = 1u << 28;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + key + "' expects a non-negative integer, got '" +
                                value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

SegmentLabels FeatureSequence::segment_labels() const {
  return SegmentLabels(std::vector<std::size_t>(labels.begin(), labels.end()),
                       categories + 1);
}

void FeatureSequence::validate() const {
  const std::size_t t = labels.size();
  if (t == 0) throw std::invalid_argument(video_id + ": no segments");
  if (audio.rows() != t || visual.rows() != t) {
    throw std::invalid_argument(video_id + ": " + std::to_string(t) + " labels but " +
                                std::to_string(audio.rows()) + " audio and " +
                                std::to_string(visual.rows()) + " visual rows");
  }
  for (const auto l : labels) {
    if (l > categories) {
      throw std::invalid_argument(video_id + ": label " + std::to_string(l) +
                                  " exceeds background index " +
                                  std::to_string(categories));
    }
  }
}

template <typename Real>
ModelInput<Real> FeatureSequence::model_input() const {
  auto convert = [](const Matrix<float>& m) {
    Matrix<Real> out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<Real>(m.data()[i]);
    return out;
  };
  return {convert(audio), convert(visual)};
}

template ModelInput<float> FeatureSequence::model_input<float>() const;
template ModelInput<double> FeatureSequence::model_input<double>() const;

void write_features(std::ostream& out, const FeatureSequence& seq) {
  seq.validate();
  if (seq.categories >= 0xFFFFu) {
    throw std::invalid_argument("category count does not fit u16 labels");
  }
  BinaryWriter w(out);
  w.magic(kFeatureMagic);
  w.u16(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(seq.steps()));
  w.u32(static_cast<std::uint32_t>(seq.audio.cols()));
  w.u32(static_cast<std::uint32_t>(seq.visual.cols()));
  w.u32(static_cast<std::uint32_t>(seq.categories));
  for (const float v : seq.audio.span()) w.f32(v);
  for (const float v : seq.visual.span()) w.f32(v);
  for (const auto l : seq.labels) w.u16(l);
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
  write_features(out, seq);
  if (!out) throw FormatError(FormatErrc::io, "failed writing " + path.string());
}

FeatureSequence read_features(std::istream& in, std::string video_id) {
  BinaryReader r(in);
  r.expect_magic(kFeatureMagic);
  const auto version = r.u16("version");
  if (version != kFeatureVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      "feature file version " + std::to_string(version) + ", expected " +
                          std::to_string(kFeatureVersion),
                      4);
  }
  const std::uint64_t steps = r.u32("T");
  const std::uint64_t audio_dim = r.u32("d_a");
  const std::uint64_t visual_dim = r.u32("d_v");
  const std::uint64_t categories = r.u32("C");
  if (steps == 0 || audio_dim == 0 || visual_dim == 0 || categories == 0 ||
      steps > kMaxDim || audio_dim > kMaxDim || visual_dim > kMaxDim ||
      categories >= 0xFFFFu || steps * (audio_dim + visual_dim) > kMaxValues) {
    throw FormatError(FormatErrc::dimension_overflow,
                      "header T=" + std::to_string(steps) + " d_a=" +
                          std::to_string(audio_dim) + " d_v=" + std::to_string(visual_dim) +
                          " C=" + std::to_string(categories),
                      6);
  }

  FeatureSequence seq;
  seq.video_id = std::move(video_id);
  seq.categories = static_cast<std::size_t>(categories);
  seq.audio = Matrix<float>(steps, audio_dim);
  seq.visual = Matrix<float>(steps, visual_dim);
  for (auto& v : seq.audio.span()) v = r.f32("audio features");
  for (auto& v : seq.visual.span()) v = r.f32("visual features");
  seq.labels.resize(steps);
  for (auto& l : seq.labels) {
    l = r.u16("labels");
    if (l > categories) {
      throw FormatError(FormatErrc::bad_value,
                        "label " + std::to_string(l) + " exceeds background index " +
                            std::to_string(categories),
                        r.offset() - 2);
    }
  }
  r.expect_end();
  return seq;
}

FeatureSequence read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  return read_features(in, path.stem().string());
}

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + text + "'");
}

void DatasetManifest::validate() const {
  if (categories == 0) throw std::invalid_argument("manifest: C must be at least 1");
  if (category_names.size() != categories) {
    throw std::invalid_argument("manifest: " + std::to_string(category_names.size()) +
                                " category names for C=" + std::to_string(categories));
  }
  if (audio_dim == 0 || visual_dim == 0 || steps == 0) {
    throw std::invalid_argument("manifest: d_a, d_v and T must be positive");
  }
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.video_id).second) {
      throw std::invalid_argument("manifest: video '" + e.video_id +
                                  "' listed more than once");
    }
  }
}

std::vector<ManifestEntry> DatasetManifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  return e.path.is_absolute() ? e.path : base_dir / e.path;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(number) +
                                  ": expected key=value, got '" + t + "'");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_key_values(in);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    if (line.find('\t') != std::string::npos) {
      const auto fields = split_on(line, '\t');
      if (fields.size() != 3) {
        throw std::invalid_argument("manifest line " + std::to_string(number) +
                                    ": expected video_id<TAB>split<TAB>path");
      }
      m.entries.push_back({fields[0], parse_split(fields[1]), fields[2]});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("manifest line " + std::to_string(number) +
                                  ": not a header or record");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "C") {
      m.categories = to_count(key, value);
    } else if (key == "d_a") {
      m.audio_dim = to_count(key, value);
    } else if (key == "d_v") {
      m.visual_dim = to_count(key, value);
    } else if (key == "T") {
      m.steps = to_count(key, value);
    } else if (key == "categories") {
      m.category_names = split_on(value, ',');
    } else {
      throw std::invalid_argument("manifest: unknown header key '" + key + "'");
    }
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  m.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "C=" << m.categories << '\n'
      << "d_a=" << m.audio_dim << '\n'
      << "d_v=" << m.visual_dim << '\n'
      << "T=" << m.steps << '\n'
      << "categories=";
  for (std::size_t i = 0; i < m.category_names.size(); ++i) {
    out << (i ? "," : "") << m.category_names[i];
  }
  out << '\n';
  for (const auto& e : m.entries) {
    out << e.video_id << '\t' << to_string(e.split) << '\t' << e.path.generic_string()
        << '\n';
  }
}

std::vector<FeatureSequence> load_split(const DatasetManifest& m, Split s) {
  std::vector<FeatureSequence> out;
  for (const auto& e : m.split(s)) {
    auto seq = read_features(m.resolve(e));
    seq.video_id = e.video_id;
    if (seq.audio.cols() != m.audio_dim || seq.visual.cols() != m.visual_dim ||
        seq.categories != m.categories || seq.steps() != m.steps) {
      throw std::invalid_argument(
          e.video_id + ": file dims (T=" + std::to_string(seq.steps()) +
          ", d_a=" + std::to_string(seq.audio.cols()) + ", d_v=" +
          std::to_string(seq.visual.cols()) + ", C=" + std::to_string(seq.categories) +
          ") disagree with manifest (T=" + std::to_string(m.steps) + ", d_a=" +
          std::to_string(m.audio_dim) + ", d_v=" + std::to_string(m.visual_dim) +
          ", C=" + std::to_string(m.categories) + ")");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

void SynthConfig::validate() const {
  if (categories == 0 || audio_dim == 0 || visual_dim == 0 || steps == 0) {
    throw std::invalid_argument("synth: C, d_a, d_v and T must be positive");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth: noise_sigma must be >= 0");
  if (!(background_overlap >= 0.0 && background_overlap <= 1.0)) {
    throw std::invalid_argument("synth: background_overlap must lie in [0, 1]");
  }
  if (categories + 1 > std::min(audio_dim, visual_dim)) {
    throw std::invalid_argument(
        "synth: C+1 = " + std::to_string(categories + 1) +
        " prototypes do not fit orthogonally in min(d_a, d_v) = " +
        std::to_string(std::min(audio_dim, visual_dim)));
  }
}

SynthConfig synth_config_from(const std::map<std::string, std::string>& kv,
                              SynthConfig cfg) {
  for (const auto& [key, value] : kv) {
    if (key == "C") cfg.categories = to_count(key, value);
    else if (key == "d_a") cfg.audio_dim = to_count(key, value);
    else if (key == "d_v") cfg.visual_dim = to_count(key, value);
    else if (key == "T") cfg.steps = to_count(key, value);
    else if (key == "train") cfg.train_videos = to_count(key, value);
    else if (key == "val") cfg.val_videos = to_count(key, value);
    else if (key == "test") cfg.test_videos = to_count(key, value);
    else if (key == "noise_sigma") cfg.noise_sigma = to_real(key, value);
    else if (key == "prototype_scale") cfg.prototype_scale = to_real(key, value);
    else if (key == "background_overlap") cfg.background_overlap = to_real(key, value);
    else if (key == "seed") cfg.seed = to_count(key, value);
    else throw std::invalid_argument("synth config: unknown key '" + key + "'");
  }
  return cfg;
}

namespace {

Matrix<double> orthogonal_prototypes(std::size_t count, std::size_t dim,
                                     Xorshift64Star& rng) {
  Matrix<double> p(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    auto row = p.row(i);
    for (auto& v : row) v = rng.normal();
    for (std::size_t j = 0; j < i; ++j) {
      const auto prev = p.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += row[k] * prev[k];
      for (std::size_t k = 0; k < dim; ++k) row[k] -= dot * prev[k];
    }
    double norm = 0.0;
    for (const double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : row) v /= norm;
  }
  const double scale = std::sqrt(static_cast<double>(dim));
  for (auto& v : p.span()) v *= scale;
  return p;
}

void emit(std::span<float> dst, std::span<const double> prototype, double scale,
          double sigma, Xorshift64Star& rng) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst[k] = static_cast<float>(prototype[k] * scale + sigma * rng.normal());
  }
}

}  // namespace

SyntheticDataset generate_synthetic_videos(const SynthConfig& cfg) {
  cfg.validate();
  Xorshift64Star rng(cfg.seed);
  SyntheticDataset ds;
  ds.prototypes.audio = orthogonal_prototypes(cfg.categories + 1, cfg.audio_dim, rng);
  ds.prototypes.visual = orthogonal_prototypes(cfg.categories + 1, cfg.visual_dim, rng);
  const std::size_t bg = cfg.categories;
  const std::size_t T = cfg.steps;

  auto make_video = [&](Split split, std::size_t index) {
    FeatureSequence seq;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%05zu", to_string(split), index);
    seq.video_id = id;
    seq.categories = cfg.categories;
    seq.audio = Matrix<float>(T, cfg.audio_dim);
    seq.visual = Matrix<float>(T, cfg.visual_dim);
    seq.labels.assign(T, static_cast<std::uint16_t>(bg));

    const std::size_t event = rng.below(cfg.categories);
    const std::size_t length = 1 + rng.below(T);
    const std::size_t start = rng.below(T - length + 1);
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t audio_class = bg;
      std::size_t visual_class = bg;
      if (t >= start && t < start + length) {
        audio_class = visual_class = event;
        if (rng.uniform() < cfg.background_overlap) {
          (rng.uniform() < 0.5 ? audio_class : visual_class) = bg;
        }
      }
      if (audio_class == visual_class) seq.labels[t] = static_cast<std::uint16_t>(audio_class);
      emit(seq.audio.row(t), ds.prototypes.audio.row(audio_class), cfg.prototype_scale,
           cfg.noise_sigma, rng);
      emit(seq.visual.row(t), ds.prototypes.visual.row(visual_class),
           cfg.prototype_scale, cfg.noise_sigma, rng);
    }
    ds.videos.push_back({split, std::move(seq)});
  };

  for (std::size_t i = 0; i < cfg.train_videos; ++i) make_video(Split::train, i);
  for (std::size_t i = 0; i < cfg.val_videos; ++i) make_video(Split::val, i);
  for (std::size_t i = 0; i < cfg.test_videos; ++i) make_video(Split::test, i);
  return ds;
}

DatasetManifest generate_synthetic(const SynthConfig& cfg,
                                   const std::filesystem::path& out_dir) {
  const auto ds = generate_synthetic_videos(cfg);
  std::filesystem::create_directories(out_dir / "features");
  DatasetManifest m;
  m.categories = cfg.categories;
  for (std::size_t k = 0; k < cfg.categories; ++k) {
    m.category_names.push_back("event" + std::to_string(k));
  }
  m.audio_dim = cfg.audio_dim;
  m.visual_dim = cfg.visual_dim;
  m.steps = cfg.steps;
  m.base_dir = out_dir;
  for (const auto& v : ds.videos) {
    const auto rel = std::filesystem::path("features") / (v.features.video_id + ".avsd");
    write_features(out_dir / rel, v.features);
    m.entries.push_back({v.features.video_id, v.split, rel});
  }
  write_manifest(out_dir / "manifest.txt", m);
  return m;
}

double frame_accuracy(std::span<const std::size_t> predictions,
                      std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("frame_accuracy: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(labels.size()) +
                                " labels");
  }
  if (labels.empty()) throw std::invalid_argument("frame_accuracy: no segments");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace avsdn
