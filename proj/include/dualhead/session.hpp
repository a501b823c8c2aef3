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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dualhead/config.hpp"
#include "dualhead/decode.hpp"
#include "dualhead/guidance.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/segmask.hpp"
#include "dualhead/wire.hpp"

namespace dualhead {

// Everything a run needs besides the config itself.
struct RunAssets {
  HeadModel model;
  PoseDataset poses;  // empty when the config names no dataset
  LinearDecoder decoder;
};

// Loads model, pose dataset and decoder named by the config; empty paths
// fall back to the desk model, no dataset and the default decoder.
RunAssets load_run_assets(const RunConfig& config);

Endpoint guidance_endpoint(const GuidanceConfig& guidance);

// Feature image at one view through the hi-lo path on the fixed backdrop.
Tensor render_view_features(const RunAssets& assets, const RunConfig& config, const AvatarState& state,
                            const ArticulationPose& pose, double azimuth, double elevation);

// RGB image [3, H, W]: decoded features, or the Lambertian shading at the
// hi resolution when `textureless` is set.
Tensor render_view_rgb(const RunAssets& assets, const RunConfig& config, const AvatarState& state,
                       const ArticulationPose& pose, double azimuth, double elevation, bool textureless);

// Provider selected by config.guidance.kind. The analytic target is read
// from target_path, else rendered from target_texture_path, else from
// `initial` (a frontal view).
std::unique_ptr<GuidanceProvider> make_guidance(const RunConfig& config, const RunAssets& assets,
                                                const AvatarState& initial);

std::unique_ptr<MaskReferenceSource> make_mask_source(const RunConfig& config, const RunAssets& assets);

// psi: JSON array of numbers; phi: JSON array of [x, y, z] axis-angle
// triples, one per joint. Empty text keeps the neutral value.
ArticulationPose pose_from_json(const HeadModel& model, std::string_view psi_json, std::string_view phi_json);

// Wavefront OBJ with per-vertex UVs.
std::string mesh_to_obj(std::span<const Vec3> vertices, std::span<const Face> faces,
                        std::span<const std::array<float, 2>> uv);

}  // namespace dualhead
