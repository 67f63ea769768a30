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

// Little-endian primitives shared by the feature and checkpoint formats.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace avsdn {

enum class FormatErrc {
  bad_magic,
  version_mismatch,
  truncated,
  dimension_overflow,
  bad_value,
  io,
};

const char* to_string(FormatErrc code);

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& message, std::size_t offset = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        offset_(offset) {}

  FormatErrc code() const { return code_; }
  /// Byte offset at which the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  FormatErrc code_;
  std::size_t offset_;
};

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }
  void u16(std::uint16_t v) { put<2>(v); }
  void u32(std::uint32_t v) { put<4>(v); }
  void f32(float v) { put<4>(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put<8>(std::bit_cast<std::uint64_t>(v)); }

 private:
  template <std::size_t N, typename U>
  void put(U v) {
    std::array<char, N> b{};
    for (std::size_t i = 0; i < N; ++i) {
      b[i] = static_cast<char>(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
    out_.write(b.data(), N);
  }

  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  /// Reads a tag of `expected.size()` bytes; throws bad_magic on mismatch.
  void expect_magic(std::string_view expected) {
    std::string got(expected.size(), '\0');
    read(got.data(), got.size(), "magic");
    if (got != expected) {
      throw FormatError(FormatErrc::bad_magic,
                        "expected magic '" + std::string(expected) + "', found '" + got + "'",
                        0);
    }
  }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get<2>(what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get<4>(what)); }
  float f32(const char* what) {
    return std::bit_cast<float>(static_cast<std::uint32_t>(get<4>(what)));
  }
  double f64(const char* what) { return std::bit_cast<double>(get<8>(what)); }

  std::size_t offset() const { return offset_; }

  /// Throws unless the stream is exhausted.
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError(FormatErrc::bad_value,
                        "trailing bytes after offset " + std::to_string(offset_), offset_);
    }
  }

 private:
  template <std::size_t N>
  std::uint64_t get(const char* what) {
    std::array<char, N> b{};
    read(b.data(), N, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < N; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    }
    return v;
  }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw FormatError(FormatErrc::truncated,
                        std::string("file ends while reading ") + what + " at byte offset " +
                            std::to_string(offset_ + got),
                        offset_ + got);
    }
    offset_ += n;
  }

  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace avsdn
