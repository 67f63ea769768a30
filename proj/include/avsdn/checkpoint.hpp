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

// Model checkpoint ("AVSM"), all fields little-endian:
//
//   magic "AVSM" | u16 version (1)
//   u32 d_a | u32 d_v | u32 h | u32 C
//   u32 init mode (0 fusion, 1 visual_only, 2 audio_only, 3 label_guided)
//   u32 precision (0 standard, 1 checking)
//   f64 parameters, tensor by tensor in ModelParams::tensors() order, each
//   tensor row-major.

#include <filesystem>
#include <iosfwd>

#include "avsdn/model.hpp"
#include "avsdn/tensor.hpp"

namespace avsdn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointInfo {
  ModelDims dims;
  InitMode mode = InitMode::fusion;
  Precision precision = Precision::standard;
};

template <typename Real>
struct Checkpoint {
  CheckpointInfo info;
  ModelParams<Real> params;
};

template <typename Real>
void write_checkpoint(std::ostream& out, const ModelParams<Real>& params,
                      InitMode mode, Precision precision);

template <typename Real>
void write_checkpoint(const std::filesystem::path& path,
                      const ModelParams<Real>& params, InitMode mode,
                      Precision precision);

/// Values are converted to Real after reading; a float model saved and
/// reloaded as float is bit-identical.
template <typename Real>
Checkpoint<Real> read_checkpoint(std::istream& in);

template <typename Real>
Checkpoint<Real> read_checkpoint(const std::filesystem::path& path);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

}  // namespace avsdn
