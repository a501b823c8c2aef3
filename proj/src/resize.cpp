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

#include "dualhead/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

struct Tap {
  int lo;
  int hi;
  float w_hi;  // weight of `hi`; `lo` gets 1 - w_hi
};

std::vector<Tap> axis_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(s - lo)};
  }
  return taps;
}

// Exact on constant inputs: lerp(c, c, t) == c.
inline float lerp(float a, float b, float t) { return a + t * (b - a); }

void check_image(const Shape& shape, const char* what) {
  if (shape.size() != 3) throw DimensionError(std::string(what) + ": expected a [C,H,W] tensor");
  if (shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) {
    throw DimensionError(std::string(what) + ": zero-size input " + shape_to_string(shape));
  }
}

}  // namespace

Tensor bilinear_resize(const Tensor& src, int out_h, int out_w) {
  check_image(src.shape(), "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: output dims must be >= 1");
  const int c_n = static_cast<int>(src.dim(0));
  const int in_h = static_cast<int>(src.dim(1));
  const int in_w = static_cast<int>(src.dim(2));
  const auto ty = axis_taps(in_h, out_h);
  const auto tx = axis_taps(in_w, out_w);

  Tensor out({c_n, out_h, out_w});
  for (int c = 0; c < c_n; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[y];
      for (int x = 0; x < out_w; ++x) {
        const Tap& b = tx[x];
        const float top = lerp(src.at(c, a.lo, b.lo), src.at(c, a.lo, b.hi), b.w_hi);
        const float bot = lerp(src.at(c, a.hi, b.lo), src.at(c, a.hi, b.hi), b.w_hi);
        out.at(c, y, x) = lerp(top, bot, a.w_hi);
      }
    }
  }
  return out;
}

Tensor bilinear_resize_backward(const Shape& src_shape, const Tensor& out_adjoint) {
  check_image(src_shape, "bilinear_resize_backward");
  if (out_adjoint.rank() != 3 || out_adjoint.dim(0) != src_shape[0]) {
    throw DimensionError("bilinear_resize_backward: adjoint shape " +
                         shape_to_string(out_adjoint.shape()) + " incompatible with source " +
                         shape_to_string(src_shape));
  }
  const int c_n = static_cast<int>(src_shape[0]);
  const int in_h = static_cast<int>(src_shape[1]);
  const int in_w = static_cast<int>(src_shape[2]);
  const int out_h = static_cast<int>(out_adjoint.dim(1));
  const int out_w = static_cast<int>(out_adjoint.dim(2));
  const auto ty = axis_taps(in_h, out_h);
  const auto tx = axis_taps(in_w, out_w);

  Tensor grad(src_shape);
  for (int c = 0; c < c_n; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[y];
      for (int x = 0; x < out_w; ++x) {
        const Tap& b = tx[x];
        const float g = out_adjoint.at(c, y, x);
        if (g == 0.0f) continue;
        const float gt = (1.0f - a.w_hi) * g;
        const float gb = a.w_hi * g;
        grad.at(c, a.lo, b.lo) += (1.0f - b.w_hi) * gt;
        grad.at(c, a.lo, b.hi) += b.w_hi * gt;
        grad.at(c, a.hi, b.lo) += (1.0f - b.w_hi) * gb;
        grad.at(c, a.hi, b.hi) += b.w_hi * gb;
      }
    }
  }
  return grad;
}

}  // namespace dualhead
