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

#include "dualhead/chunk_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

static_assert(std::endian::native == std::endian::little,
              "serialisation assumes a little-endian host");

class Writer {
 public:
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void pod(T v) {
    raw(&v, sizeof(T));
  }
  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  void raw(void* p, size_t n) {
    if (pos_ + n > in_.size()) throw IoError("truncated archive");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v{};
    raw(&v, sizeof(T));
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

template <typename T>
Chunk make_chunk(DType dtype, Shape shape, std::span<const T> values) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
    throw DimensionError("chunk shape " + shape_to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  Chunk c;
  c.dtype = dtype;
  c.shape = std::move(shape);
  c.bytes.resize(values.size() * sizeof(T));
  if (!values.empty()) std::memcpy(c.bytes.data(), values.data(), c.bytes.size());
  return c;
}

template <typename T>
std::vector<T> chunk_values(const Chunk& c, DType expected, const std::string& name) {
  if (c.dtype != expected) throw IoError("chunk '" + name + "' has unexpected dtype");
  std::vector<T> out(c.bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), c.bytes.data(), c.bytes.size());
  return out;
}

}  // namespace

size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32:
    case DType::kI32:
      return 4;
    case DType::kU8:
      return 1;
    case DType::kU64:
      return 8;
  }
  throw IoError("unknown dtype");
}

void ChunkArchive::put_f32(const std::string& name, Shape shape, std::span<const float> values) {
  chunks_[name] = make_chunk(DType::kF32, std::move(shape), values);
}
void ChunkArchive::put_i32(const std::string& name, Shape shape, std::span<const int32_t> values) {
  chunks_[name] = make_chunk(DType::kI32, std::move(shape), values);
}
void ChunkArchive::put_u8(const std::string& name, Shape shape, std::span<const uint8_t> values) {
  chunks_[name] = make_chunk(DType::kU8, std::move(shape), values);
}
void ChunkArchive::put_u64(const std::string& name, std::span<const uint64_t> values) {
  chunks_[name] = make_chunk(DType::kU64, {static_cast<int64_t>(values.size())}, values);
}
void ChunkArchive::put_string(const std::string& name, std::string_view s) {
  put_u8(name, {static_cast<int64_t>(s.size())},
         std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

const Chunk& ChunkArchive::get(const std::string& name) const {
  auto it = chunks_.find(name);
  if (it == chunks_.end()) throw IoError("archive has no chunk '" + name + "'");
  return it->second;
}
std::vector<float> ChunkArchive::get_f32(const std::string& name) const {
  return chunk_values<float>(get(name), DType::kF32, name);
}
std::vector<int32_t> ChunkArchive::get_i32(const std::string& name) const {
  return chunk_values<int32_t>(get(name), DType::kI32, name);
}
std::vector<uint8_t> ChunkArchive::get_u8(const std::string& name) const {
  return chunk_values<uint8_t>(get(name), DType::kU8, name);
}
std::vector<uint64_t> ChunkArchive::get_u64(const std::string& name) const {
  return chunk_values<uint64_t>(get(name), DType::kU64, name);
}
Tensor ChunkArchive::get_tensor(const std::string& name) const {
  return Tensor(get(name).shape, get_f32(name));
}
std::string ChunkArchive::get_string(const std::string& name) const {
  const auto b = get_u8(name);
  return std::string(b.begin(), b.end());
}

std::vector<uint8_t> ChunkArchive::serialize(std::string_view magic) const {
  if (magic.size() != 4) throw IoError("archive magic must be 4 bytes");
  Writer w;
  w.raw(magic.data(), 4);
  w.pod<uint32_t>(1);
  w.pod<uint32_t>(static_cast<uint32_t>(chunks_.size()));
  for (const auto& [name, c] : chunks_) {
    w.pod<uint16_t>(static_cast<uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.pod<uint8_t>(static_cast<uint8_t>(c.dtype));
    w.pod<uint8_t>(static_cast<uint8_t>(c.shape.size()));
    for (int64_t d : c.shape) w.pod<uint64_t>(static_cast<uint64_t>(d));
    w.pod<uint64_t>(c.bytes.size());
    w.raw(c.bytes.data(), c.bytes.size());
  }
  return w.take();
}

ChunkArchive ChunkArchive::deserialize(std::span<const uint8_t> bytes, std::string_view magic) {
  Reader r(bytes);
  char m[4];
  r.raw(m, 4);
  if (std::string_view(m, 4) != magic) {
    throw IoError("bad archive magic, expected " + std::string(magic));
  }
  if (r.pod<uint32_t>() != 1) throw IoError("unsupported archive version");
  const uint32_t count = r.pod<uint32_t>();
  ChunkArchive ar;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name(r.pod<uint16_t>(), '\0');
    r.raw(name.data(), name.size());
    Chunk c;
    const uint8_t dt = r.pod<uint8_t>();
    if (dt > 3) throw IoError("chunk '" + name + "' has unknown dtype");
    c.dtype = static_cast<DType>(dt);
    const uint8_t ndim = r.pod<uint8_t>();
    for (uint8_t k = 0; k < ndim; ++k) c.shape.push_back(static_cast<int64_t>(r.pod<uint64_t>()));
    const uint64_t nbytes = r.pod<uint64_t>();
    if (nbytes != static_cast<uint64_t>(shape_numel(c.shape)) * dtype_size(c.dtype)) {
      throw IoError("chunk '" + name + "' payload size does not match its shape");
    }
    c.bytes.resize(nbytes);
    r.raw(c.bytes.data(), nbytes);
    ar.chunks_[name] = std::move(c);
  }
  if (!r.done()) throw IoError("trailing bytes after archive");
  return ar;
}

void ChunkArchive::write(const std::filesystem::path& path, std::string_view magic) const {
  write_file_bytes(path, serialize(magic));
}

ChunkArchive ChunkArchive::read(const std::filesystem::path& path, std::string_view magic) {
  return deserialize(read_file_bytes(path), magic);
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  Writer w;
  w.raw("TNS1", 4);
  w.pod<uint8_t>(0);
  w.pod<uint8_t>(static_cast<uint8_t>(t.rank()));
  for (int64_t d : t.shape()) w.pod<uint64_t>(static_cast<uint64_t>(d));
  w.raw(t.data(), t.size() * sizeof(float));
  write_file_bytes(path, w.take());
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  Reader r(bytes);
  char m[4];
  r.raw(m, 4);
  if (std::string_view(m, 4) != "TNS1") throw IoError(path.string() + " is not a TNS1 tensor");
  if (r.pod<uint8_t>() != 0) throw IoError("TNS1: only float32 payloads are supported");
  const uint8_t ndim = r.pod<uint8_t>();
  Shape shape;
  for (uint8_t k = 0; k < ndim; ++k) shape.push_back(static_cast<int64_t>(r.pod<uint64_t>()));
  std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
  r.raw(data.data(), data.size() * sizeof(float));
  if (!r.done()) throw IoError("TNS1: trailing bytes");
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace dualhead
