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
#include <cstdint>
#include <string>
#include <vector>

#include "dualhead/tensor.hpp"

namespace dualhead {

// Input of the score-distillation contract: d(loss)/dF for a feature image F.
struct GuidanceRequest {
  Tensor feature_image;  // [4, H, W]
  std::string prompt;
  float t_min = 0.02f;
  float t_max = 0.98f;
  float cfg_scale = 100.0f;
  uint64_t seed = 0;
  int64_t iteration = 0;

  // Throws ConfigError / DimensionError on an invalid request.
  void validate() const;
};

struct GuidanceResponse {
  Tensor grad;  // same shape as the request image
  double timestep = 0.0;
  double noise_norm = 0.0;
};

struct SegmentRequest {
  Tensor image;                               // [3, H, W] RGB in [0, 1]
  Tensor background;                          // [3, H, W], may be empty
  std::vector<std::array<int32_t, 2>> anchors;  // (x, y) pixels
};

}  // namespace dualhead
