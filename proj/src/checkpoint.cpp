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

#include "avsdn/checkpoint.hpp"

#include <fstream>
#include <limits>

#include "avsdn/binary_format.hpp"

namespace avsdn {

namespace {

constexpr std::string_view kMagic = "AVSM";
constexpr std::uint32_t kMaxDim = 1u << 20;

std::uint32_t mode_code(InitMode mode) {
  switch (mode) {
    case InitMode::fusion: return 0;
    case InitMode::visual_only: return 1;
    case InitMode::audio_only: return 2;
    case InitMode::label_guided: return 3;
  }
  return 0;
}

CheckpointInfo read_header(BinaryReader& r) {
  r.expect_magic(kMagic);
  const auto version = r.u16("version");
  if (version != kCheckpointVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      "checkpoint version " + std::to_string(version) +
                          ", expected " + std::to_string(kCheckpointVersion),
                      4);
  }
  CheckpointInfo info;
  std::uint32_t dims[4];
  const char* names[4] = {"d_a", "d_v", "h", "C"};
  for (int i = 0; i < 4; ++i) {
    dims[i] = r.u32(names[i]);
    if (dims[i] == 0 || dims[i] > kMaxDim) {
      throw FormatError(FormatErrc::dimension_overflow,
                        std::string(names[i]) + " = " + std::to_string(dims[i]),
                        r.offset() - 4);
    }
  }
  info.dims = {dims[0], dims[1], dims[2], dims[3]};
  const auto mode = r.u32("init mode");
  if (mode > 3) {
    throw FormatError(FormatErrc::bad_value, "init mode " + std::to_string(mode),
                      r.offset() - 4);
  }
  constexpr InitMode kModes[] = {InitMode::fusion, InitMode::visual_only,
                                 InitMode::audio_only, InitMode::label_guided};
  info.mode = kModes[mode];
  const auto precision = r.u32("precision");
  if (precision > 1) {
    throw FormatError(FormatErrc::bad_value, "precision " + std::to_string(precision),
                      r.offset() - 4);
  }
  info.precision = precision == 0 ? Precision::standard : Precision::checking;
  return info;
}

}  // namespace

template <typename Real>
void write_checkpoint(std::ostream& out, const ModelParams<Real>& params,
                      InitMode mode, Precision precision) {
  BinaryWriter w(out);
  w.magic(kMagic);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.dims.audio_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.visual_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.hidden));
  w.u32(static_cast<std::uint32_t>(params.dims.categories));
  w.u32(mode_code(mode));
  w.u32(precision == Precision::standard ? 0u : 1u);
  for (const auto& t : params.tensors()) {
    for (const Real v : t.values) w.f64(static_cast<double>(v));
  }
}

template <typename Real>
void write_checkpoint(const std::filesystem::path& path,
                      const ModelParams<Real>& params, InitMode mode,
                      Precision precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
  }
  write_checkpoint(out, params, mode, precision);
  if (!out) throw FormatError(FormatErrc::io, "failed writing " + path.string());
}

template <typename Real>
Checkpoint<Real> read_checkpoint(std::istream& in) {
  BinaryReader r(in);
  Checkpoint<Real> ck;
  ck.info = read_header(r);
  ck.params = ModelParams<Real>::zeros(ck.info.dims);
  for (auto& t : ck.params.tensors()) {
    for (auto& v : t.values) {
      const double x = r.f64(t.name.c_str());
      v = static_cast<Real>(x);
    }
  }
  r.expect_end();
  return ck;
}

template <typename Real>
Checkpoint<Real> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  return read_checkpoint<Real>(in);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  BinaryReader r(in);
  return read_header(r);
}

#define AVSDN_INSTANTIATE_CHECKPOINT(Real)                                           \
  template void write_checkpoint(std::ostream&, const ModelParams<Real>&, InitMode,  \
                                 Precision);                                         \
  template void write_checkpoint(const std::filesystem::path&,                       \
                                 const ModelParams<Real>&, InitMode, Precision);     \
  template Checkpoint<Real> read_checkpoint(std::istream&);                          \
  template Checkpoint<Real> read_checkpoint(const std::filesystem::path&);

AVSDN_INSTANTIATE_CHECKPOINT(float)
AVSDN_INSTANTIATE_CHECKPOINT(double)

}  // namespace avsdn
