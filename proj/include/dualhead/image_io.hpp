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
#include <span>
#include <vector>

#include "dualhead/raster.hpp"
#include "dualhead/tensor.hpp"

namespace dualhead {

// 8-bit PNG (colour type 0 for 1 channel, 2 for 3 channels), filter 0 rows.
std::vector<uint8_t> encode_png(int width, int height, int channels,
                                std::span<const uint8_t> pixels);

// [3, H, W] or [1, H, W] tensor in [0, 1]; values are clamped and rounded.
std::vector<uint8_t> to_rgb8(const Tensor& image);

void write_png(const std::filesystem::path& path, const Tensor& image);
// 0/255 greyscale.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

}  // namespace dualhead
