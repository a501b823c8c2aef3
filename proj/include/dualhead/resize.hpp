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

#include "dualhead/tensor.hpp"

namespace dualhead {

// Bilinear resampling of a [C, H, W] tensor with the align-corners=false
// convention: output pixel (x, y) samples the source at
//   xs = (x + 0.5) * W_in / W_out - 0.5,  ys = (y + 0.5) * H_in / H_out - 0.5,
// clamped to [0, W_in - 1] x [0, H_in - 1]. The two bracketing texels per axis
// get weights (1 - frac, frac); an out-of-range upper neighbour collapses onto
// the clamped edge texel.
Tensor bilinear_resize(const Tensor& src, int out_h, int out_w);

// Transpose of bilinear_resize for a source of shape `src_shape`.
Tensor bilinear_resize_backward(const Shape& src_shape, const Tensor& out_adjoint);

}  // namespace dualhead
