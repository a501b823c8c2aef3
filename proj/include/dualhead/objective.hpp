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
#include "dualhead/decode.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/mesh.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/tensor.hpp"

namespace dualhead {

struct RegWeights {
  float lambda1 = 0.5f;     // offsets
  float lambda2 = 5000.0f;  // Laplacian smoothness
  float lambda3 = 5000.0f;  // Laplacian prior
  // Indexed by Region: scalp, face, forehead, other.
  std::array<float, 4> region_scale{0.1f, 0.5f, 0.5f, 1.0f};
  float seg_lambda = 1000.0f;

  void validate() const;
};

struct AlphaSchedule {
  int64_t ramp_iters = 4000;
  float post_min = 0.6f;
  float post_max = 1.0f;

  void validate() const;
};

// iteration / ramp_iters during the ramp, afterwards uniform in
// [post_min, post_max] drawn from rng.
double alpha_at(const AlphaSchedule& schedule, int64_t iteration, std::mt19937_64& rng);

// alpha F + (1 - alpha) S, elementwise.
Tensor blend_guidance_input(const Tensor& features, const Tensor& shaded_features, float alpha);
// Adjoint with respect to F: alpha * upstream.
Tensor blend_guidance_backward(const Tensor& upstream, float alpha);

// Greyscale shaded render [3, H, W] -> [4, H, W] feature image. With an
// invertible decoder the grey level g maps to P (g - b), P the decoder's
// right inverse, so decoding reproduces g; otherwise g is replicated.
Tensor shaded_to_features(const Tensor& shaded, const LinearDecoder* decoder);

struct LossWithGrad {
  double value = 0.0;
  std::vector<Vec3> grad;
};

// mean |offset component| over all V x 3 entries.
LossWithGrad loss_off(std::span<const Vec3> offsets);

// (1/V) sum_i ||(L V)_i||_1.
LossWithGrad loss_lap(const VertexAdjacency& adjacency, std::span<const Vec3> vertices);

// (1/V) sum_i scale(region_i) ||(L V)_i - (L T)_i||^2.
LossWithGrad loss_prior(const VertexAdjacency& adjacency, std::span<const Vec3> vertices,
                        std::span<const Vec3> template_laplacian, std::span<const Region> regions,
                        const std::array<float, 4>& region_scale);

// Where a gradient came from; a step records the union for each variable set.
enum GradSource : uint32_t {
  kGradGuidance = 1u,
  kGradSegmentation = 2u,
  kGradRegularizer = 4u,
};

struct GeometryLossParts {
  double seg = 0.0;  // already multiplied by seg_lambda
  double off = 0.0;
  double lap = 0.0;
  double prior = 0.0;
  double total = 0.0;
};

// Fixed inputs shared by every geometry step of a run.
struct GeometryContext {
  const HeadModel* model = nullptr;
  VertexAdjacency adjacency;
  std::vector<Vec3> template_laplacian;  // L T of the un-enlarged template
  RegWeights weights;
  RasterSettings soft;  // resolution of M and blur parameters
  Camera camera;        // azimuth is overridden per call

  static GeometryContext create(const HeadModel& model, const RegWeights& weights,
                                const RasterSettings& soft, const Camera& camera);
};

struct GeometryLossResult {
  GeometryLossParts parts;
  GeometryGradients grads;  // beta, theta, C only
  uint32_t sources = 0;
  Tensor soft_mask;
};

// seg_lambda L_seg + lambda1 L_off + lambda2 L_lap + lambda3 L_prior at the
// neutral expression and pose. A null reference skips the segmentation term.
GeometryLossResult total_geometry_loss(const GeometryContext& ctx, const AvatarState& state,
                                       const Mask* reference, double azimuth_deg);

}  // namespace dualhead
