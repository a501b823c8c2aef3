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

#include "dualhead/objective.hpp"

#include <cmath>

#include "dualhead/errors.hpp"
#include "dualhead/segmask.hpp"

namespace dualhead {

void RegWeights::validate() const {
  const bool ok = lambda1 >= 0.0f && lambda2 >= 0.0f && lambda3 >= 0.0f && seg_lambda >= 0.0f;
  if (!ok) throw ConfigError("regularizer weights must be non-negative");
  for (float s : region_scale) {
    if (!(s >= 0.0f)) throw ConfigError("region scales must be non-negative");
  }
}

void AlphaSchedule::validate() const {
  if (ramp_iters < 0) throw ConfigError("alpha ramp length must be non-negative");
  if (!(post_min >= 0.0f && post_min <= post_max && post_max <= 1.0f)) {
    throw ConfigError("alpha range must satisfy 0 <= min <= max <= 1");
  }
}

double alpha_at(const AlphaSchedule& s, int64_t iteration, std::mt19937_64& rng) {
  if (iteration < s.ramp_iters) {
    return static_cast<double>(iteration) / static_cast<double>(s.ramp_iters);
  }
  const double u = std::generate_canonical<double, 53>(rng);
  return s.post_min + (static_cast<double>(s.post_max) - s.post_min) * u;
}

Tensor blend_guidance_input(const Tensor& features, const Tensor& shaded_features, float alpha) {
  shaded_features.expect_shape(features.shape(), "shaded features");
  Tensor out(features.shape());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * features[i] + (1.0f - alpha) * shaded_features[i];
  }
  return out;
}

Tensor blend_guidance_backward(const Tensor& upstream, float alpha) {
  Tensor out(upstream.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * upstream[i];
  return out;
}

Tensor shaded_to_features(const Tensor& shaded, const LinearDecoder* decoder) {
  if (shaded.rank() != 3 || shaded.dim(0) != 3) {
    throw DimensionError("shaded_to_features expects [3,H,W], got " + shape_to_string(shaded.shape()));
  }
  const int64_t h = shaded.dim(1), w = shaded.dim(2);
  Tensor out({4, h, w});
  const auto inverse = decoder ? decoder_right_inverse(*decoder) : std::nullopt;
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const float g = shaded.at(0, y, x);
      for (int k = 0; k < 4; ++k) {
        float v = g;
        if (inverse) {
          v = 0.0f;
          for (int j = 0; j < 3; ++j) v += (*inverse)[k * 3 + j] * (g - decoder->bias[j]);
        }
        out.at(k, y, x) = v;
      }
    }
  }
  return out;
}

namespace {

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

}  // namespace

LossWithGrad loss_off(std::span<const Vec3> offsets) {
  LossWithGrad r;
  r.grad.resize(offsets.size());
  if (offsets.empty()) return r;
  const double n = 3.0 * static_cast<double>(offsets.size());
  double sum = 0.0;
  const float g = static_cast<float>(1.0 / n);
  for (size_t i = 0; i < offsets.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      sum += std::abs(offsets[i][k]);
      r.grad[i][k] = g * sign_of(offsets[i][k]);
    }
  }
  r.value = sum / n;
  return r;
}

LossWithGrad loss_lap(const VertexAdjacency& adjacency, std::span<const Vec3> vertices) {
  LossWithGrad r;
  if (vertices.empty()) return r;
  const auto lap = uniform_laplacian(adjacency, vertices);
  const double n = static_cast<double>(vertices.size());
  const float g = static_cast<float>(1.0 / n);
  std::vector<Vec3> lap_adj(lap.size());
  double sum = 0.0;
  for (size_t i = 0; i < lap.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      sum += std::abs(lap[i][k]);
      lap_adj[i][k] = g * sign_of(lap[i][k]);
    }
  }
  r.value = sum / n;
  r.grad = uniform_laplacian_transpose(adjacency, lap_adj);
  return r;
}

LossWithGrad loss_prior(const VertexAdjacency& adjacency, std::span<const Vec3> vertices,
                        std::span<const Vec3> template_laplacian, std::span<const Region> regions,
                        const std::array<float, 4>& region_scale) {
  if (template_laplacian.size() != vertices.size() || regions.size() != vertices.size()) {
    throw DimensionError("loss_prior: vertex, template and region counts differ");
  }
  LossWithGrad r;
  if (vertices.empty()) return r;
  const auto lap = uniform_laplacian(adjacency, vertices);
  const double n = static_cast<double>(vertices.size());
  std::vector<Vec3> lap_adj(lap.size());
  double sum = 0.0;
  for (size_t i = 0; i < lap.size(); ++i) {
    const float s = region_scale[static_cast<size_t>(regions[i])];
    double row = 0.0;
    for (int k = 0; k < 3; ++k) {
      const float d = lap[i][k] - template_laplacian[i][k];
      row += static_cast<double>(d) * d;
      lap_adj[i][k] = static_cast<float>(2.0 * s * d / n);
    }
    sum += s * row;
  }
  r.value = sum / n;
  r.grad = uniform_laplacian_transpose(adjacency, lap_adj);
  return r;
}

GeometryContext GeometryContext::create(const HeadModel& model, const RegWeights& weights,
                                        const RasterSettings& soft, const Camera& camera) {
  weights.validate();
  GeometryContext ctx;
  ctx.model = &model;
  ctx.adjacency = build_adjacency(model.faces, model.num_vertices());
  ctx.template_laplacian = uniform_laplacian(ctx.adjacency, model.template_vertices);
  ctx.weights = weights;
  ctx.soft = soft;
  ctx.soft.mode = RasterMode::kSoft;
  ctx.soft.validate();
  ctx.camera = camera;
  return ctx;
}

GeometryLossResult total_geometry_loss(const GeometryContext& ctx, const AvatarState& state,
                                       const Mask* reference, double azimuth_deg) {
  if (!ctx.model) throw ConfigError("geometry context has no model");
  const HeadModel& model = *ctx.model;
  const RegWeights& w = ctx.weights;
  const ArticulationPose pose = ArticulationPose::neutral(model);
  const PoseEvaluation eval = posed_vertices(model, state, pose);
  const size_t v = model.num_vertices();

  GeometryLossResult r;
  std::vector<Vec3> posed_adj(v);

  if (reference) {
    Camera cam = ctx.camera;
    cam.pose.azimuth_deg = static_cast<float>(azimuth_deg);
    cam.pose.elevation_deg = 0.0f;
    const SoftMaskOutput soft = render_soft_mask(eval.posed, model.faces, cam, ctx.soft);
    const SegLossResult seg = seg_loss(*reference, soft.mask, w.seg_lambda);
    r.parts.seg = seg.value;
    const auto g = render_soft_mask_backward(soft, seg.mask_adjoint);
    for (size_t i = 0; i < v; ++i) posed_adj[i] += g[i];
    r.soft_mask = soft.mask;
    r.sources |= kGradSegmentation;
  }

  std::vector<Vec3> offsets(v);
  for (size_t i = 0; i < v; ++i) {
    offsets[i] = Vec3{eval.mlp_offsets.at(i, 0), eval.mlp_offsets.at(i, 1), eval.mlp_offsets.at(i, 2)};
    if (!state.base_offsets.empty()) offsets[i] += state.base_offsets[i];
  }
  const LossWithGrad off = loss_off(offsets);
  const LossWithGrad lap = loss_lap(ctx.adjacency, eval.posed);
  const LossWithGrad prior =
      loss_prior(ctx.adjacency, eval.posed, ctx.template_laplacian, model.regions, w.region_scale);
  r.parts.off = w.lambda1 * off.value;
  r.parts.lap = w.lambda2 * lap.value;
  r.parts.prior = w.lambda3 * prior.value;
  r.parts.total = r.parts.seg + r.parts.off + r.parts.lap + r.parts.prior;
  if (w.lambda1 > 0.0f || w.lambda2 > 0.0f || w.lambda3 > 0.0f) r.sources |= kGradRegularizer;

  std::vector<Vec3> offset_adj(v);
  for (size_t i = 0; i < v; ++i) {
    posed_adj[i] += lap.grad[i] * w.lambda2 + prior.grad[i] * w.lambda3;
    offset_adj[i] = off.grad[i] * w.lambda1;
  }
  r.grads = posed_vertices_backward(model, state, eval, posed_adj, offset_adj);
  return r;
}

}  // namespace dualhead
