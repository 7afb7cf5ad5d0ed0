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

#include "cata/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "cata/error.hpp"

namespace cata::io {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

std::string_view ByteReader::bytes(std::size_t n) {
  if (n > remaining()) {
    throw DataError("truncated binary data: wanted " + std::to_string(n) +
                    " bytes at offset " + std::to_string(pos_));
  }
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }

std::uint32_t ByteReader::u32() {
  auto b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = bytes(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() { return std::string(bytes(u32())); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

void TensorFile::add(std::string name, const Eigen::MatrixXd& value) {
  tensors_.push_back({std::move(name), value, 2});
}

void TensorFile::add_vector(std::string name, const Eigen::VectorXd& value) {
  tensors_.push_back({std::move(name), value, 1});
}

const Eigen::MatrixXd& TensorFile::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t.value;
  }
  throw DataError("tensor '" + std::string(name) + "' missing from checkpoint");
}

const std::string& TensorFile::attribute(std::string_view key) const {
  auto it = attributes_.find(key);
  if (it == attributes_.end()) {
    throw DataError("attribute '" + std::string(key) + "' missing from checkpoint");
  }
  return it->second;
}

bool TensorFile::has_attribute(std::string_view key) const {
  return attributes_.find(key) != attributes_.end();
}

std::string TensorFile::serialize() const {
  ByteWriter w;
  w.bytes(kTensorMagic);
  w.u8(kTensorFormatVersion);
  w.u32(static_cast<std::uint32_t>(attributes_.size()));
  for (const auto& [k, v] : attributes_) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& t : tensors_) {
    w.str(t.name);
    w.u8(static_cast<std::uint8_t>(t.rank));
    w.u64(static_cast<std::uint64_t>(t.value.rows()));
    if (t.rank == 2) w.u64(static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        w.f32(static_cast<float>(t.value(r, c)));
      }
    }
  }
  return w.data();
}

TensorFile TensorFile::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kTensorMagic.size() || r.bytes(kTensorMagic.size()) != kTensorMagic) {
    throw DataError("not a tensor checkpoint (bad magic)");
  }
  if (auto version = r.u8(); version != kTensorFormatVersion) {
    throw DataError("unsupported tensor checkpoint version " + std::to_string(version));
  }
  TensorFile out;
  const auto n_attrs = r.u32();
  for (std::uint32_t i = 0; i < n_attrs; ++i) {
    auto key = r.str();
    out.attributes_[std::move(key)] = r.str();
  }
  const auto n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = r.str();
    t.rank = r.u8();
    if (t.rank != 1 && t.rank != 2) {
      throw DataError("tensor '" + t.name + "' has unsupported rank " + std::to_string(t.rank));
    }
    const auto rows = r.u64();
    const auto cols = t.rank == 2 ? r.u64() : 1;
    if (rows != 0 && cols > r.remaining() / 4 / rows) {
      throw DataError("tensor '" + t.name + "' shape exceeds file size");
    }
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index rr = 0; rr < t.value.rows(); ++rr) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) t.value(rr, c) = r.f32();
    }
    out.tensors_.push_back(std::move(t));
  }
  if (!r.at_end()) throw DataError("trailing bytes after tensor checkpoint");
  return out;
}

void TensorFile::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace cata::io
