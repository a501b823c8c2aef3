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

#include "dualhead/decode.hpp"

#include <algorithm>
#include <cmath>

#include "dualhead/chunk_io.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/resize.hpp"
#include "json.hpp"

namespace dualhead {

using nlohmann::json;

LinearDecoder default_decoder() {
  // Rows are latent channels, columns RGB.
  constexpr float kFactors[4][3] = {{0.298f, 0.207f, 0.208f},
                                    {0.187f, 0.286f, 0.173f},
                                    {-0.158f, 0.189f, 0.264f},
                                    {-0.184f, -0.271f, -0.473f}};
  LinearDecoder d;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 4; ++k) d.weight[c * 4 + k] = 0.5f * kFactors[k][c];
    d.bias[c] = 0.5f;
  }
  return d;
}

LinearDecoder decoder_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    LinearDecoder d;
    const auto& w = j.at("weight");
    const auto& b = j.at("bias");
    if (w.size() != 3 || b.size() != 3) throw ConfigError("decoder weight must be 3x4 and bias 3");
    for (int c = 0; c < 3; ++c) {
      if (w[c].size() != 4) throw ConfigError("decoder weight must be 3x4");
      for (int k = 0; k < 4; ++k) d.weight[c * 4 + k] = w[c][k].get<float>();
      d.bias[c] = b[c].get<float>();
    }
    d.upsample = j.value("upsample", 8);
    if (d.upsample < 1) throw ConfigError("decoder upsample must be >= 1");
    return d;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("decoder config: ") + e.what());
  }
}

std::string decoder_to_json(const LinearDecoder& d) {
  json w = json::array();
  for (int c = 0; c < 3; ++c) {
    w.push_back({d.weight[c * 4], d.weight[c * 4 + 1], d.weight[c * 4 + 2], d.weight[c * 4 + 3]});
  }
  return json{{"weight", w}, {"bias", d.bias}, {"upsample", d.upsample}}.dump(2);
}

LinearDecoder load_decoder(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decoder_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Tensor decode_linear(const LinearDecoder& dec, const Tensor& features) {
  if (features.rank() != 3 || features.dim(0) != 4) {
    throw DimensionError("decode_linear expects [4,H,W], got " + shape_to_string(features.shape()));
  }
  const int64_t h = features.dim(1), w = features.dim(2);
  Tensor rgb({3, h, w});
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        float v = dec.bias[c];
        for (int k = 0; k < 4; ++k) v += dec.weight[c * 4 + k] * features.at(k, y, x);
        rgb.at(c, y, x) = v;
      }
    }
  }
  Tensor out = bilinear_resize(rgb, static_cast<int>(h * dec.upsample), static_cast<int>(w * dec.upsample));
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

std::optional<std::array<float, 12>> decoder_right_inverse(const LinearDecoder& dec) {
  double g[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += static_cast<double>(dec.weight[i * 4 + k]) * dec.weight[j * 4 + k];
      g[i][j] = s;
    }
  }
  const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                     g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                     g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
  double scale = 0.0;
  for (auto& row : g) for (double v : row) scale = std::max(scale, std::abs(v));
  if (!(std::abs(det) > 1e-12 * scale * scale * scale) || scale == 0.0) return std::nullopt;
  double inv[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[i][j] = (g[r0][c0] * g[r1][c1] - g[r0][c1] * g[r1][c0]) / det;
    }
  }
  std::array<float, 12> p{};
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += dec.weight[i * 4 + k] * inv[i][j];
      p[k * 3 + j] = static_cast<float>(s);
    }
  }
  return p;
}

Tensor decode_remote(const WireClient& client, const Tensor& features, int upsample) {
  if (features.rank() != 3 || features.dim(0) != 4) {
    throw DimensionError("decode_remote expects [4,H,W], got " + shape_to_string(features.shape()));
  }
  Tensor rgb = decode_decode_response(client.post("/v1/decode", encode_decode_request(features)));
  const Shape expected{3, features.dim(1) * upsample, features.dim(2) * upsample};
  if (rgb.shape() != expected) {
    throw GuidanceError("decode response has shape " + shape_to_string(rgb.shape()) + ", expected " +
                        shape_to_string(expected));
  }
  if (!rgb.all_finite()) throw GuidanceError("decode response is not finite");
  return rgb;
}

}  // namespace dualhead
