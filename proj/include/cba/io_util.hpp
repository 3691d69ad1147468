// cba/io_util.hpp

// Copyright 2026 The CBA Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CBA_IO_UTIL_HPP_
#define CBA_IO_UTIL_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "cba/errors.hpp"

namespace cba {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not wired up");

// Little-endian binary writer for the CBAD1/CBAC1 formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError("cannot open '" + path + "' for writing");
  }

  void write_bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(n));
    if (!out_) throw FormatError("write failed on '" + path_ + "'");
  }

  void write_u8(std::uint8_t v) { write_bytes(&v, 1); }
  void write_u32(std::uint32_t v) { write_bytes(&v, 4); }
  void write_i32(std::int32_t v) { write_bytes(&v, 4); }
  void write_u64(std::uint64_t v) { write_bytes(&v, 8); }
  void write_f32(float v) { write_bytes(&v, 4); }
  void write_f64(double v) { write_bytes(&v, 8); }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open '" + path + "' for reading");
  }

  void read_bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw TruncationError("'" + path_ + "' ended " +
                            std::to_string(n - in_.gcount()) +
                            " bytes short of the advertised payload");
  }

  std::uint8_t read_u8() { std::uint8_t v; read_bytes(&v, 1); return v; }
  std::uint32_t read_u32() { std::uint32_t v; read_bytes(&v, 4); return v; }
  std::int32_t read_i32() { std::int32_t v; read_bytes(&v, 4); return v; }
  std::uint64_t read_u64() { std::uint64_t v; read_bytes(&v, 8); return v; }
  float read_f32() { float v; read_bytes(&v, 4); return v; }
  double read_f64() { double v; read_bytes(&v, 8); return v; }

  bool at_eof() { return in_.peek() == std::ifstream::traits_type::eof(); }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace cba

#endif  // CBA_IO_UTIL_HPP_
