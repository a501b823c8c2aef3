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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dualhead/camera.hpp"
#include "dualhead/decode.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/tensor.hpp"
#include "dualhead/wire.hpp"

namespace dualhead {

using Pixel = std::array<int32_t, 2>;  // (x, y)

struct LutSpec {
  int azimuth_min = -30;
  int azimuth_max = 30;
  int step = 1;
  int resolution = 512;

  void validate() const;
  size_t count() const { return static_cast<size_t>((azimuth_max - azimuth_min) / step + 1); }
};

// Reference foreground masks, one per azimuth in [min, max] at `step`.
struct MaskLUT {
  LutSpec spec;
  std::vector<Mask> masks;
  int64_t built_at_iteration = -1;
  // Smallest IoU between masks at neighbouring azimuths.
  double min_neighbor_iou = 1.0;

  // Nearest tabulated azimuth; throws ConfigError outside the range.
  size_t index_of(double azimuth_deg) const;
  const Mask& lookup(double azimuth_deg) const { return masks[index_of(azimuth_deg)]; }
  double azimuth_at(size_t i) const { return spec.azimuth_min + static_cast<double>(i) * spec.step; }
};

// Largest candidate containing every anchor; ties keep the lower index.
// Throws Error when no candidate contains the anchors.
Mask select_head_mask(std::span<const Mask> candidates, std::span<const Pixel> anchors);

// 4-connected components ordered by their first pixel in raster order.
std::vector<Mask> connected_components(const Mask& mask);
Mask largest_component(const Mask& mask);
// Sets every background pixel not 4-connected to the image border.
Mask fill_holes(const Mask& mask);

// Pixels whose RGB distance to the known background exceeds `threshold`,
// reduced to the largest connected component with holes filled.
Mask builtin_segmenter(const Tensor& rgb, const Tensor& background_rgb, float threshold = 0.1f);

// 3x3 block around the projection of `point`, clipped to the image.
std::vector<Pixel> center_anchors(const Vec3& point, const Camera& camera, int width, int height);

// Produces the reference mask S0(a) for the current avatar at one azimuth.
class MaskReferenceSource {
 public:
  virtual ~MaskReferenceSource() = default;
  virtual Mask reference(const AvatarState& state, double azimuth_deg, int resolution) const = 0;
  virtual std::string name() const = 0;
};

// Hard silhouette of a fixed mesh; ignores the avatar.
class TargetMeshMaskSource final : public MaskReferenceSource {
 public:
  TargetMeshMaskSource(std::vector<Vec3> vertices, std::vector<Face> faces, Camera camera)
      : vertices_(std::move(vertices)), faces_(std::move(faces)), camera_(camera) {}
  Mask reference(const AvatarState& state, double azimuth_deg, int resolution) const override;
  std::string name() const override { return "target-mesh"; }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  Camera camera_;
};

// Renders the avatar at neutral expression and pose in front of a flat
// backdrop, decodes to RGB and segments it, either with the builtin segmenter
// or through /v1/segment when a client is given. The backdrop colour is picked
// from a fixed palette to be far from every decoded foreground colour.
class RenderSegmentSource final : public MaskReferenceSource {
 public:
  struct Options {
    int feature_resolution = 64;
    int hi_resolution = 512;
    float threshold = 0.1f;
  };
  RenderSegmentSource(const HeadModel& model, LinearDecoder decoder, Camera camera, Options options,
                      std::shared_ptr<const WireClient> remote = nullptr)
      : model_(model), decoder_(decoder), camera_(camera), options_(options), remote_(std::move(remote)) {}
  Mask reference(const AvatarState& state, double azimuth_deg, int resolution) const override;
  std::string name() const override { return remote_ ? "remote-segment" : "builtin-segment"; }

 private:
  const HeadModel& model_;
  LinearDecoder decoder_;
  Camera camera_;
  Options options_;
  std::shared_ptr<const WireClient> remote_;
};

// Throws Error naming every azimuth whose mask could not be produced.
MaskLUT build_mask_lut(const MaskReferenceSource& source, const AvatarState& state,
                       const LutSpec& spec, int64_t iteration);

struct SegLossResult {
  double value = 0.0;
  Tensor mask_adjoint;  // [h, w]
};

// lambda * mean((S0(a) - Upsample(M))^2), M [h, w] bilinearly upsampled to the
// LUT resolution.
SegLossResult seg_loss(const MaskLUT& lut, const Tensor& soft_mask, double azimuth_deg, float lambda);
SegLossResult seg_loss(const Mask& reference, const Tensor& soft_mask, float lambda);

}  // namespace dualhead
