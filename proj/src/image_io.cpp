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

#include "dualhead/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "dualhead/chunk_io.hpp"
#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32be(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32be(out, static_cast<uint32_t>(crc));
}

}  // namespace

std::vector<uint8_t> encode_png(int width, int height, int channels,
                                std::span<const uint8_t> pixels) {
  if (width < 1 || height < 1) throw DimensionError("encode_png: empty image");
  if (channels != 1 && channels != 3) throw DimensionError("encode_png: 1 or 3 channels");
  const size_t row = static_cast<size_t>(width) * channels;
  if (pixels.size() != row * height) throw DimensionError("encode_png: pixel count mismatch");

  std::vector<uint8_t> raw;
  raw.reserve((row + 1) * height);
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + y * row, pixels.begin() + (y + 1) * row);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw IoError("encode_png: deflate failed");
  }
  packed.resize(packed_size);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_u32be(ihdr, static_cast<uint32_t>(width));
  put_u32be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);
  ihdr.push_back(channels == 1 ? 0 : 2);
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

std::vector<uint8_t> to_rgb8(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 3 && image.dim(0) != 1)) {
    throw DimensionError("to_rgb8: expected [3,H,W] or [1,H,W], got " +
                         shape_to_string(image.shape()));
  }
  const int64_t c_n = image.dim(0), h = image.dim(1), w = image.dim(2);
  std::vector<uint8_t> out(static_cast<size_t>(c_n * h * w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < c_n; ++c) {
        float v = image.at(c, y, x);
        if (!std::isfinite(v)) v = 0.0f;
        out[(y * w + x) * c_n + c] =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  const auto px = to_rgb8(image);
  write_file_bytes(path, encode_png(static_cast<int>(image.dim(2)), static_cast<int>(image.dim(1)),
                                    static_cast<int>(image.dim(0)), px));
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<uint8_t> px(mask.data.size());
  for (size_t i = 0; i < px.size(); ++i) px[i] = mask.data[i] ? 255 : 0;
  write_file_bytes(path, encode_png(mask.width, mask.height, 1, px));
}

}  // namespace dualhead
