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

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>

#include "dualhead/tensor.hpp"
#include "dualhead/wire.hpp"

namespace dualhead {

// Per-pixel affine latent -> RGB map followed by bilinear upsampling.
struct LinearDecoder {
  std::array<float, 12> weight{};  // [3, 4] row-major
  std::array<float, 3> bias{};
  int upsample = 8;
};

// Approximate latent -> RGB factors of the common latent-diffusion VAE,
// rescaled from [-1, 1] to [0, 1].
LinearDecoder default_decoder();

// JSON {"weight": [[4 floats] x3], "bias": [3 floats], "upsample": 8 (optional)}.
LinearDecoder decoder_from_json(std::string_view text);
std::string decoder_to_json(const LinearDecoder& dec);
LinearDecoder load_decoder(const std::filesystem::path& path);

// Affine map then bilinear x`upsample` then clamp to [0, 1]. F is [4, H, W].
Tensor decode_linear(const LinearDecoder& dec, const Tensor& features);

// Minimum-norm right inverse P = W^T (W W^T)^-1 as [4, 3] row-major, or
// nullopt when W W^T is singular.
std::optional<std::array<float, 12>> decoder_right_inverse(const LinearDecoder& dec);

// Remote /v1/decode. The response is shape-checked against [3, 8H, 8W].
Tensor decode_remote(const WireClient& client, const Tensor& features, int upsample = 8);

}  // namespace dualhead
