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

#include "dualhead/segmask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualhead/errors.hpp"
#include "dualhead/resize.hpp"

namespace dualhead {

void LutSpec::validate() const {
  if (step < 1 || azimuth_max < azimuth_min || (azimuth_max - azimuth_min) % step != 0) {
    throw ConfigError("mask LUT azimuth range must be a whole number of steps");
  }
  if (resolution < 1) throw ConfigError("mask LUT resolution must be positive");
}

size_t MaskLUT::index_of(double azimuth_deg) const {
  const double k = std::round((azimuth_deg - spec.azimuth_min) / spec.step);
  if (!(k >= 0.0 && k < static_cast<double>(masks.size()))) {
    throw ConfigError("azimuth " + std::to_string(azimuth_deg) + " is outside the mask LUT range");
  }
  return static_cast<size_t>(k);
}

Mask select_head_mask(std::span<const Mask> candidates, std::span<const Pixel> anchors) {
  if (candidates.empty()) throw Error("select_head_mask: no candidates");
  int best = -1;
  size_t best_count = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Mask& m = candidates[i];
    const bool anchored = std::all_of(anchors.begin(), anchors.end(), [&](const Pixel& p) {
      return p[0] >= 0 && p[1] >= 0 && p[0] < m.width && p[1] < m.height && m.at(p[0], p[1]);
    });
    if (!anchored) continue;
    const size_t c = m.count();
    if (best < 0 || c > best_count) {
      best = static_cast<int>(i);
      best_count = c;
    }
  }
  if (best < 0) throw Error("select_head_mask: no candidate contains the centre anchors");
  return candidates[best];
}

namespace {

// Labels 4-connected foreground (value == `target`) regions; returns the
// number of labels. Unlabelled pixels are -1.
int label_regions(const Mask& mask, uint8_t target, std::vector<int32_t>& labels) {
  const int w = mask.width, h = mask.height;
  labels.assign(mask.data.size(), -1);
  int next = 0;
  std::vector<int32_t> stack;
  for (int start = 0; start < w * h; ++start) {
    if (mask.data[start] != target || labels[start] >= 0) continue;
    labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int q = n[1] * w + n[0];
        if (mask.data[q] == target && labels[q] < 0) {
          labels[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  return next;
}

}  // namespace

std::vector<Mask> connected_components(const Mask& mask) {
  std::vector<int32_t> labels;
  const int n = label_regions(mask, 1, labels);
  std::vector<Mask> out(static_cast<size_t>(n), Mask(mask.width, mask.height));
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[labels[i]].data[i] = 1;
  }
  return out;
}

Mask largest_component(const Mask& mask) {
  std::vector<int32_t> labels;
  const int n = label_regions(mask, 1, labels);
  Mask out(mask.width, mask.height);
  if (n == 0) return out;
  std::vector<size_t> sizes(static_cast<size_t>(n), 0);
  for (int32_t l : labels) {
    if (l >= 0) ++sizes[l];
  }
  const auto best = static_cast<int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (size_t i = 0; i < labels.size(); ++i) out.data[i] = labels[i] == best ? 1 : 0;
  return out;
}

Mask fill_holes(const Mask& mask) {
  std::vector<int32_t> labels;
  label_regions(mask, 0, labels);
  std::vector<uint8_t> outside;
  const int w = mask.width, h = mask.height;
  auto mark = [&](int x, int y) {
    const int32_t l = labels[static_cast<size_t>(y) * w + x];
    if (l < 0) return;
    if (outside.size() <= static_cast<size_t>(l)) outside.resize(l + 1, 0);
    outside[l] = 1;
  };
  for (int x = 0; x < w; ++x) {
    mark(x, 0);
    mark(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    mark(0, y);
    mark(w - 1, y);
  }
  Mask out = mask;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int32_t l = labels[i];
    if (l >= 0 && (static_cast<size_t>(l) >= outside.size() || !outside[l])) out.data[i] = 1;
  }
  return out;
}

Mask builtin_segmenter(const Tensor& rgb, const Tensor& background_rgb, float threshold) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw DimensionError("builtin_segmenter expects [3,H,W]");
  background_rgb.expect_shape(rgb.shape(), "segmenter background");
  const int h = static_cast<int>(rgb.dim(1)), w = static_cast<int>(rgb.dim(2));
  Mask fg(w, h);
  const float t2 = threshold * threshold;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float d2 = 0.0f;
      for (int c = 0; c < 3; ++c) {
        const float d = rgb.at(c, y, x) - background_rgb.at(c, y, x);
        d2 += d * d;
      }
      fg.data[static_cast<size_t>(y) * w + x] = d2 > t2 ? 1 : 0;
    }
  }
  return fill_holes(largest_component(fg));
}

std::vector<Pixel> center_anchors(const Vec3& point, const Camera& camera, int width, int height) {
  const auto p = make_camera_frame(camera).project(point);
  const int cx = static_cast<int>(std::floor((p.x + 1.0) * width / 2.0));
  const int cy = static_cast<int>(std::floor((1.0 - p.y) * height / 2.0));
  std::vector<Pixel> out;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = cx + dx, y = cy + dy;
      if (x >= 0 && y >= 0 && x < width && y < height) out.push_back({x, y});
    }
  }
  return out;
}

Mask TargetMeshMaskSource::reference(const AvatarState&, double azimuth_deg, int resolution) const {
  Camera cam = camera_;
  cam.pose.azimuth_deg = static_cast<float>(azimuth_deg);
  cam.pose.elevation_deg = 0.0f;
  return rasterize_hard(vertices_, faces_, cam, resolution, resolution).coverage();
}

namespace {

Tensor constant_image(std::span<const float> color, int64_t h, int64_t w) {
  Tensor t({static_cast<int64_t>(color.size()), h, w});
  for (size_t c = 0; c < color.size(); ++c) {
    std::fill(t.data() + c * h * w, t.data() + (c + 1) * h * w, color[c]);
  }
  return t;
}

}  // namespace

Mask RenderSegmentSource::reference(const AvatarState& state, double azimuth_deg, int resolution) const {
  const int lo = options_.feature_resolution;
  if (lo * decoder_.upsample != resolution) {
    throw ConfigError("mask LUT resolution must equal feature resolution x decoder upsample");
  }
  Camera cam = camera_;
  cam.pose.azimuth_deg = static_cast<float>(azimuth_deg);
  cam.pose.elevation_deg = 0.0f;
  const PoseEvaluation eval = posed_vertices(model_, state, ArticulationPose::neutral(model_));

  // Candidate backdrops in RGB, mapped into feature space when the decoder
  // has a right inverse.
  static constexpr float kPalette[][3] = {{0.0f, 1.0f, 0.0f}, {1.0f, 0.0f, 1.0f}, {0.0f, 0.0f, 1.0f},
                                          {1.0f, 1.0f, 0.0f}, {0.0f, 1.0f, 1.0f}, {1.0f, 0.0f, 0.0f},
                                          {0.0f, 0.0f, 0.0f}, {1.0f, 1.0f, 1.0f}};
  const auto inverse = decoder_right_inverse(decoder_);
  auto to_features = [&](const float* rgb) {
    std::vector<float> f(4, 0.0f);
    for (int k = 0; k < 4; ++k) {
      if (inverse) {
        for (int j = 0; j < 3; ++j) f[k] += (*inverse)[k * 3 + j] * (rgb[j] - decoder_.bias[j]);
      } else {
        f[k] = k < 3 ? rgb[k] : 0.0f;
      }
    }
    return f;
  };

  // Decoded foreground colours from a first render; coverage comes from the
  // hi-res hard mask so only fully covered pixels count.
  BackgroundSpec probe;
  probe.color_a.assign(4, 0.0f);
  const HiLoOutput first = render_hi_lo(eval.posed, model_.faces, model_.uv, state.texture, cam,
                                        options_.hi_resolution, lo, &probe);
  const Tensor rgb0 = decode_linear(decoder_, first.features);
  Tensor cover({1, options_.hi_resolution, options_.hi_resolution});
  for (size_t i = 0; i < first.hi.hard_mask.data.size(); ++i) cover[i] = first.hi.hard_mask.data[i];
  const Tensor cover_r = bilinear_resize(cover, resolution, resolution);

  size_t best = 0;
  double best_dist = -1.0;
  for (size_t p = 0; p < std::size(kPalette); ++p) {
    const auto feat = to_features(kPalette[p]);
    const Tensor bg_rgb = decode_linear(decoder_, constant_image(feat, 1, 1));
    double nearest = std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < static_cast<int64_t>(resolution) * resolution; ++i) {
      if (cover_r[i] < 0.999f) continue;
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = rgb0[c * resolution * resolution + i] - bg_rgb[c * bg_rgb.dim(1) * bg_rgb.dim(2)];
        d2 += d * d;
      }
      nearest = std::min(nearest, d2);
    }
    if (nearest > best_dist) {
      best_dist = nearest;
      best = p;
    }
  }

  BackgroundSpec bg;
  bg.color_a = to_features(kPalette[best]);
  const HiLoOutput shot = render_hi_lo(eval.posed, model_.faces, model_.uv, state.texture, cam,
                                       options_.hi_resolution, lo, &bg);
  const Tensor rgb = decode_linear(decoder_, shot.features);
  const Tensor bg_rgb = decode_linear(decoder_, constant_image(bg.color_a, lo, lo));

  Vec3 centroid{};
  for (const auto& v : model_.template_vertices) centroid = centroid + v;
  centroid = centroid * (1.0f / static_cast<float>(model_.num_vertices()));
  const auto anchors = center_anchors(centroid, cam, resolution, resolution);

  std::vector<Mask> candidates;
  if (remote_) {
    SegmentRequest req{rgb, bg_rgb, anchors};
    Mask m = decode_segment_response(remote_->post("/v1/segment", encode_segment_request(req)));
    if (m.width != resolution || m.height != resolution) {
      throw GuidanceError("segment response has the wrong size");
    }
    candidates.push_back(std::move(m));
  } else {
    // Half the weakest foreground contrast: a blurred edge pixel counts once
    // it is at least half covered, so the mask neither grows nor shrinks
    // with the decoder's upsampling blur.
    const float half_contrast = best_dist > 0.0 ? static_cast<float>(0.5 * std::sqrt(best_dist)) : 0.0f;
    candidates.push_back(builtin_segmenter(rgb, bg_rgb, std::max(options_.threshold, half_contrast)));
  }
  return select_head_mask(candidates, anchors);
}

MaskLUT build_mask_lut(const MaskReferenceSource& source, const AvatarState& state,
                       const LutSpec& spec, int64_t iteration) {
  spec.validate();
  MaskLUT lut;
  lut.spec = spec;
  lut.built_at_iteration = iteration;
  std::string failed;
  for (size_t i = 0; i < spec.count(); ++i) {
    const double az = spec.azimuth_min + static_cast<double>(i) * spec.step;
    try {
      lut.masks.push_back(source.reference(state, az, spec.resolution));
    } catch (const Error& e) {
      failed += (failed.empty() ? "" : ", ") + std::to_string(static_cast<int>(az)) + " (" + e.what() + ")";
      lut.masks.emplace_back(spec.resolution, spec.resolution);
    }
  }
  if (!failed.empty()) throw Error("mask LUT build failed at azimuths: " + failed);
  for (size_t i = 1; i < lut.masks.size(); ++i) {
    lut.min_neighbor_iou = std::min(lut.min_neighbor_iou, mask_iou(lut.masks[i - 1], lut.masks[i]));
  }
  return lut;
}

SegLossResult seg_loss(const Mask& reference, const Tensor& soft_mask, float lambda) {
  if (soft_mask.rank() != 2) throw DimensionError("seg_loss expects a [h,w] soft mask");
  const int h = static_cast<int>(soft_mask.dim(0)), w = static_cast<int>(soft_mask.dim(1));
  const Tensor m({1, h, w}, soft_mask.storage());
  const Tensor up = bilinear_resize(m, reference.height, reference.width);
  const size_t n = reference.data.size();
  Tensor up_adj(up.shape());
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(up[i]) - reference.data[i];
    sum += d * d;
    up_adj[i] = static_cast<float>(2.0 * lambda * d / static_cast<double>(n));
  }
  SegLossResult r;
  r.value = lambda * sum / static_cast<double>(n);
  const Tensor adj = bilinear_resize_backward(m.shape(), up_adj);
  r.mask_adjoint = Tensor({h, w}, adj.storage());
  return r;
}

SegLossResult seg_loss(const MaskLUT& lut, const Tensor& soft_mask, double azimuth_deg, float lambda) {
  return seg_loss(lut.lookup(azimuth_deg), soft_mask, lambda);
}

}  // namespace dualhead
