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
#include <random>
#include <span>
#include <vector>

#include "dualhead/camera.hpp"
#include "dualhead/geometry.hpp"
#include "dualhead/tensor.hpp"

namespace dualhead {

enum class RasterMode { kHard, kSoft };

struct RasterSettings {
  RasterMode mode = RasterMode::kHard;
  float sigma = 1e-4f;   // blur scale of the soft silhouette, NDC^2 units
  float gamma = 1e-4f;   // softmax temperature for soft colour blending
  int faces_per_pixel = 75;
  int width = 64;
  int height = 64;
  // Faces whose influence falls below this are not blended into a pixel.
  double min_influence = 1e-7;

  // Throws ConfigError for invalid soft-mode parameters or resolution.
  void validate() const;
};

struct RasterDiagnostics {
  int degenerate_faces = 0;  // zero projected area
  int clipped_faces = 0;     // a vertex outside [near, far]
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // 0 or 1, row-major

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t count() const;
  bool operator==(const Mask&) const = default;
};

double mask_iou(const Mask& a, const Mask& b);

// Nearest-face coverage per pixel centre with perspective-correct barycentrics.
struct Fragments {
  int width = 0;
  int height = 0;
  std::vector<int32_t> face;                  // -1 where empty
  std::vector<std::array<float, 3>> bary;     // perspective-correct
  std::vector<float> depth;
  RasterDiagnostics diagnostics;

  Mask coverage() const;
};

// Pixel centre p is covered by a projected triangle when all three edge
// functions (double precision) have the sign of its signed area or are zero.
// Ties in depth keep the lower face index.
Fragments rasterize_hard_ndc(std::span<const ProjectedVertex> projected,
                             std::span<const Face> faces, int width, int height,
                             double near = 0.0, double far = 1e300);

Fragments rasterize_hard(std::span<const Vec3> vertices, std::span<const Face> faces,
                         const Camera& camera, int width, int height);

// Bilinear texture lookups of every covered pixel, kept for the backward pass.
struct TextureTaps {
  std::vector<int32_t> pixel;
  std::vector<std::array<int32_t, 4>> texel;  // y * W + x in the texture plane
  std::vector<std::array<float, 4>> weight;
};

struct RenderOutput {
  Tensor features;  // [C, H, W]
  Mask hard_mask;
  Fragments fragments;
  TextureTaps taps;
  Shape texture_shape;
};

// Hard render of a UV-textured mesh. Uncovered pixels take `background`
// (per-channel; empty means zeros). uv follows v-up: texel row = (1 - v) H - 0.5.
RenderOutput render_features(std::span<const Vec3> vertices, std::span<const Face> faces,
                             std::span<const std::array<float, 2>> uv, const Tensor& texture,
                             const Camera& camera, const RasterSettings& settings,
                             std::span<const float> background = {});

// d(loss)/d(texture) given d(loss)/d(features). Only texels are reached.
Tensor render_features_backward(const RenderOutput& out, const Tensor& feature_adjoint);
void accumulate_texture_gradient(const RenderOutput& out, const Tensor& feature_adjoint,
                                 Tensor& texture_grad);

struct SoftFragment {
  int32_t face;
  uint8_t edge;     // closest edge k: (v_k, v_{k+1})
  int8_t sign;      // +1 inside, -1 outside
  float t;          // closest-point parameter on that edge
  double influence;  // d_f = sigmoid(sign * dist^2 / sigma)
};

struct SoftMaskOutput {
  Tensor mask;  // [H, W]
  int width = 0;
  int height = 0;
  float sigma = 0.0f;
  std::vector<int32_t> offsets;  // per pixel into `fragments`, size H*W + 1
  std::vector<SoftFragment> fragments;
  std::vector<ProjectedVertex> projected;
  std::vector<Face> faces;
  std::vector<Vec3> vertices;
  CameraFrame frame;
  RasterDiagnostics diagnostics;
};

// Soft silhouette: mask = 1 - prod_f (1 - d_f) over the faces_per_pixel
// nearest faces (by centroid depth, then face index), where
// d_f = sigmoid(sign * dist^2 / sigma) and dist is the NDC distance from the
// pixel centre to the projected triangle boundary.
SoftMaskOutput render_soft_mask(std::span<const Vec3> vertices, std::span<const Face> faces,
                                const Camera& camera, const RasterSettings& settings);

// d(loss)/d(vertex positions) given d(loss)/d(mask).
std::vector<Vec3> render_soft_mask_backward(const SoftMaskOutput& out, const Tensor& mask_adjoint);

// Lambertian max(0, n . l) with flat face normals, grey replicated into 3
// channels; back-facing and empty pixels are 0.
Tensor render_shaded(std::span<const Vec3> vertices, std::span<const Face> faces,
                     const Camera& camera, int width, int height, const Vec3& light_dir);

struct BackgroundSpec {
  enum class Kind { kUniform, kCheckerboard };
  Kind kind = Kind::kUniform;
  std::vector<float> color_a;
  std::vector<float> color_b;
  int box_size = 20;  // checker box edge in pixels at the reference resolution
};

inline constexpr int kBackgroundReferenceResolution = 512;

// Uniform colour or two-colour checkerboard with box size in [15, 25].
BackgroundSpec sample_background(std::mt19937_64& rng, int channels, float lo, float hi);

// Replaces uncovered pixels of image [C, H, W]. The checker box size scales
// with W / reference_resolution.
void composite_background(Tensor& image, const Mask& hard_mask, const BackgroundSpec& bg,
                          int reference_resolution = kBackgroundReferenceResolution);

// Hard render at hi_res followed by bilinear downsampling to lo_res.
struct HiLoOutput {
  Tensor features;  // [C, lo, lo]
  RenderOutput hi;
};

HiLoOutput render_hi_lo(std::span<const Vec3> vertices, std::span<const Face> faces,
                        std::span<const std::array<float, 2>> uv, const Tensor& texture,
                        const Camera& camera, int hi_res, int lo_res,
                        const BackgroundSpec* background);

void accumulate_hi_lo_texture_gradient(const HiLoOutput& out, const Tensor& lo_adjoint,
                                       Tensor& texture_grad);

}  // namespace dualhead
