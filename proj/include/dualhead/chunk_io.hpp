// Copyright 2026 The dualhead Authors
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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualhead/tensor.hpp"

namespace dualhead {

enum class DType : uint8_t { kF32 = 0, kI32 = 1, kU8 = 2, kU64 = 3 };

size_t dtype_size(DType t);

// One named array inside an archive. Payload is little-endian, row-major.
struct Chunk {
  DType dtype = DType::kF32;
  Shape shape;
  std::vector<uint8_t> bytes;
};

// Chunked binary archive shared by model files ("HDM1") and checkpoints
// ("CKP1"). Layout, all integers little-endian:
//
//   magic[4] | u32 version (=1) | u32 chunk_count
//   per chunk: u16 name_len | name | u8 dtype | u8 ndim | u64 dims[ndim]
//              | u64 payload_bytes | payload
class ChunkArchive {
 public:
  void put_f32(const std::string& name, Shape shape, std::span<const float> values);
  void put_i32(const std::string& name, Shape shape, std::span<const int32_t> values);
  void put_u8(const std::string& name, Shape shape, std::span<const uint8_t> values);
  void put_u64(const std::string& name, std::span<const uint64_t> values);
  void put_tensor(const std::string& name, const Tensor& t) { put_f32(name, t.shape(), t.values()); }
  void put_string(const std::string& name, std::string_view s);

  bool has(const std::string& name) const { return chunks_.count(name) > 0; }
  const Chunk& get(const std::string& name) const;
  std::vector<float> get_f32(const std::string& name) const;
  std::vector<int32_t> get_i32(const std::string& name) const;
  std::vector<uint8_t> get_u8(const std::string& name) const;
  std::vector<uint64_t> get_u64(const std::string& name) const;
  Tensor get_tensor(const std::string& name) const;
  std::string get_string(const std::string& name) const;

  const std::map<std::string, Chunk>& chunks() const { return chunks_; }

  std::vector<uint8_t> serialize(std::string_view magic) const;
  static ChunkArchive deserialize(std::span<const uint8_t> bytes, std::string_view magic);
  void write(const std::filesystem::path& path, std::string_view magic) const;
  static ChunkArchive read(const std::filesystem::path& path, std::string_view magic);

 private:
  std::map<std::string, Chunk> chunks_;
};

// Single-tensor dump: "TNS1" | u8 dtype (0 = f32) | u8 ndim | u64 dims[ndim]
// | little-endian float32 payload.
void write_tensor_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_file(const std::filesystem::path& path);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace dualhead
