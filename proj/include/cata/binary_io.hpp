// Copyright 2026 The CATA Authors.
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cata::io {

// Little-endian encoder; the byte layout does not depend on host order.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view s) { buf_.append(s); }
  // u32 length prefix followed by the raw bytes.
  void str(std::string_view s);

  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Hex-encoded SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Named-tensor container shared by the network and factor checkpoints.
///
/// Layout (all integers little-endian):
///   "CATATNSR"  8 bytes magic
///   u8          format version (kTensorFormatVersion)
///   u32         attribute count, then per attribute: str key, str value
///   u32         tensor count, then per tensor:
///                 str name, u8 rank (1 or 2), u64 dims[rank],
///                 f32 values in row-major order
/// where str = u32 byte length + bytes.
inline constexpr std::string_view kTensorMagic = "CATATNSR";
inline constexpr std::uint8_t kTensorFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;  // rank-1 tensors are stored as n x 1
  int rank = 2;
};

class TensorFile {
 public:
  void add(std::string name, const Eigen::MatrixXd& value);
  void add_vector(std::string name, const Eigen::VectorXd& value);
  void set_attribute(std::string key, std::string value) {
    attributes_[std::move(key)] = std::move(value);
  }

  // Both throw DataError when the entry is absent.
  const Eigen::MatrixXd& tensor(std::string_view name) const;
  const std::string& attribute(std::string_view key) const;
  bool has_attribute(std::string_view key) const;

  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  const std::map<std::string, std::string, std::less<>>& attributes() const {
    return attributes_;
  }

  std::string serialize() const;
  static TensorFile deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static TensorFile load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string, std::less<>> attributes_;
  std::vector<NamedTensor> tensors_;
};

}  // namespace cata::io
