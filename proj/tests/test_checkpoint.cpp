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

#include <sstream>
#include <string>

#include "avsdn/binary_format.hpp"
#include "avsdn/checkpoint.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace avsdn;
using avsdn::test::kTinyDims;

namespace {

std::string serialize(const ModelParams<double>& p, InitMode mode = InitMode::label_guided) {
  std::ostringstream out;
  write_checkpoint(out, p, mode, Precision::checking);
  return out.str();
}

FormatErrc read_error(const std::string& bytes, std::size_t* offset = nullptr) {
  std::istringstream in(bytes);
  try {
    read_checkpoint<double>(in);
  } catch (const FormatError& e) {
    if (offset) *offset = e.offset();
    return e.code();
  }
  FAIL("expected a FormatError");
  return FormatErrc::io;
}

}  // namespace

TEST_CASE("checkpoint round trip is bitwise") {
  Xorshift64Star rng(1);
  const auto p = ModelParams<double>::initialize(kTinyDims, rng);
  const auto bytes = serialize(p);
  std::istringstream in(bytes);
  const auto ck = read_checkpoint<double>(in);
  CHECK(ck.info.dims == kTinyDims);
  CHECK(ck.info.mode == InitMode::label_guided);
  CHECK(ck.info.precision == Precision::checking);
  const auto a = p.tensors();
  const auto b = ck.params.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(a[i].name);
    CHECK(std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin(),
                     b[i].values.end()));
  }
  CHECK(serialize(ck.params) == bytes);
}

TEST_CASE("float checkpoints reload bit-identically") {
  Xorshift64Star rng(2);
  const auto p = ModelParams<float>::initialize(kTinyDims, rng);
  std::ostringstream out;
  write_checkpoint(out, p, InitMode::fusion, Precision::standard);
  std::istringstream in(out.str());
  const auto ck = read_checkpoint<float>(in);
  std::ostringstream again;
  write_checkpoint(again, ck.params, InitMode::fusion, Precision::standard);
  CHECK(again.str() == out.str());
}

TEST_CASE("checkpoint header errors are distinct") {
  Xorshift64Star rng(3);
  const auto bytes = serialize(ModelParams<double>::initialize(kTinyDims, rng));

  auto bad_magic = bytes;
  bad_magic.replace(0, 4, "XXXX");
  CHECK(read_error(bad_magic) == FormatErrc::bad_magic);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(read_error(bad_version) == FormatErrc::version_mismatch);

  auto zero_dim = bytes;
  for (int i = 6; i < 10; ++i) zero_dim[i] = 0;
  CHECK(read_error(zero_dim) == FormatErrc::dimension_overflow);

  auto huge_dim = bytes;
  huge_dim[9] = 0x7f;
  CHECK(read_error(huge_dim) == FormatErrc::dimension_overflow);

  auto bad_mode = bytes;
  bad_mode[22] = 9;
  CHECK(read_error(bad_mode) == FormatErrc::bad_value);
}

TEST_CASE("truncated checkpoints report the byte offset") {
  Xorshift64Star rng(4);
  const auto bytes = serialize(ModelParams<double>::initialize(kTinyDims, rng));
  const std::size_t cut = bytes.size() - 13;  // mid-way through a tensor value
  std::size_t offset = 0;
  CHECK(read_error(bytes.substr(0, cut), &offset) == FormatErrc::truncated);
  CHECK(offset == cut);

  CHECK(read_error(bytes.substr(0, 3)) == FormatErrc::truncated);
  CHECK(read_error(bytes + "x") == FormatErrc::bad_value);
}

TEST_CASE("checkpoint info reads only the header") {
  Xorshift64Star rng(5);
  const auto p = ModelParams<float>::initialize(kTinyDims, rng);
  const auto path = std::filesystem::temp_directory_path() / "avsdn_test_info.avsm";
  write_checkpoint(path, p, InitMode::audio_only, Precision::standard);
  const auto info = read_checkpoint_info(path);
  CHECK(info.dims == kTinyDims);
  CHECK(info.mode == InitMode::audio_only);
  CHECK(info.precision == Precision::standard);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_checkpoint_info(path), FormatError);
}
