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

#include "dualhead/session.hpp"

#include <cstdio>
#include <sstream>

#include "dualhead/chunk_io.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/model_io.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/trainloop.hpp"
#include "json.hpp"

namespace dualhead {

RunAssets load_run_assets(const RunConfig& config) {
  RunAssets a;
  a.model = config.model_path.empty() ? make_desk_model() : load_model(config.model_path);
  if (!config.pose_dataset_path.empty()) {
    a.poses = load_pose_dataset(config.pose_dataset_path);
    a.poses.validate(a.model);
  }
  a.decoder = config.decoder_path.empty() ? default_decoder() : load_decoder(config.decoder_path);
  return a;
}

Endpoint guidance_endpoint(const GuidanceConfig& guidance) {
  Endpoint e = parse_endpoint(guidance.endpoint);
  e.timeout_s = guidance.timeout_s;
  e.retries = guidance.retries;
  return e;
}

Tensor render_view_features(const RunAssets& assets, const RunConfig& config, const AvatarState& state,
                            const ArticulationPose& pose, double azimuth, double elevation) {
  const PoseEvaluation eval = posed_vertices(assets.model, state, pose);
  BackgroundSpec bg;
  bg.color_a = config.background.fixed_color;
  const Camera cam = make_camera(config.render, config.schedule.camera_radius, azimuth, elevation);
  return render_hi_lo(eval.posed, assets.model.faces, assets.model.uv, state.texture, cam,
                      config.render.hi_resolution, config.render.feature_resolution, &bg)
      .features;
}

Tensor render_view_rgb(const RunAssets& assets, const RunConfig& config, const AvatarState& state,
                       const ArticulationPose& pose, double azimuth, double elevation, bool textureless) {
  if (textureless) {
    const PoseEvaluation eval = posed_vertices(assets.model, state, pose);
    const Camera cam = make_camera(config.render, config.schedule.camera_radius, azimuth, elevation);
    const int hi = config.render.hi_resolution;
    return render_shaded(eval.posed, assets.model.faces, cam, hi, hi, config.render.light_dir);
  }
  return decode_linear(assets.decoder, render_view_features(assets, config, state, pose, azimuth, elevation));
}

std::unique_ptr<GuidanceProvider> make_guidance(const RunConfig& config, const RunAssets& assets,
                                                const AvatarState& initial) {
  const GuidanceConfig& g = config.guidance;
  if (g.kind == "mock") return std::make_unique<MockNoiseProvider>(config.seed, g.mock_max_norm);
  if (g.kind == "remote") return std::make_unique<RemoteProvider>(guidance_endpoint(g));
  if (g.kind != "analytic") throw ConfigError("unknown guidance kind '" + g.kind + "'");

  const ArticulationPose neutral = ArticulationPose::neutral(assets.model);
  Tensor target;
  if (!g.target_path.empty()) {
    target = read_tensor_file(g.target_path);
  } else if (!g.target_texture_path.empty()) {
    AvatarState s = initial;
    s.texture = read_tensor_file(g.target_texture_path);
    if (s.texture.rank() != 3 || s.texture.dim(0) != initial.texture.dim(0)) {
      throw ConfigError("target texture must be [" + std::to_string(initial.texture.dim(0)) + ",S,S], got " +
                        shape_to_string(s.texture.shape()));
    }
    target = render_view_features(assets, config, s, neutral, 0.0, 0.0);
  } else {
    target = render_view_features(assets, config, initial, neutral, 0.0, 0.0);
  }
  const int64_t lo = config.render.feature_resolution;
  if (target.shape() != Shape{initial.texture.dim(0), lo, lo}) {
    throw ConfigError("analytic target has shape " + shape_to_string(target.shape()) +
                      ", expected the feature image shape");
  }
  return std::make_unique<AnalyticTargetProvider>(std::move(target));
}

std::unique_ptr<MaskReferenceSource> make_mask_source(const RunConfig& config, const RunAssets& assets) {
  const SegmentConfig& s = config.segment;
  RenderSegmentSource::Options opt;
  opt.feature_resolution = s.lut.resolution / assets.decoder.upsample;
  opt.hi_resolution = s.lut.resolution;
  opt.threshold = s.threshold;
  if (opt.feature_resolution * assets.decoder.upsample != s.lut.resolution) {
    throw ConfigError("segment LUT resolution must be a multiple of the decoder upsampling factor");
  }
  const Camera cam = make_camera(config.render, config.schedule.camera_radius, 0.0, 0.0);
  std::shared_ptr<const WireClient> remote;
  if (s.kind == "remote") {
    remote = std::make_shared<WireClient>(guidance_endpoint(config.guidance));
  } else if (s.kind != "builtin") {
    throw ConfigError("unknown segment kind '" + s.kind + "'");
  }
  return std::make_unique<RenderSegmentSource>(assets.model, assets.decoder, cam, opt, std::move(remote));
}

ArticulationPose pose_from_json(const HeadModel& model, std::string_view psi_json, std::string_view phi_json) {
  ArticulationPose pose = ArticulationPose::neutral(model);
  try {
    if (!psi_json.empty()) {
      const auto j = nlohmann::json::parse(psi_json);
      if (!j.is_array() || j.size() != pose.expression.size()) {
        throw ConfigError("psi must be an array of " + std::to_string(pose.expression.size()) + " numbers");
      }
      for (size_t i = 0; i < j.size(); ++i) pose.expression[i] = j[i].get<float>();
    }
    if (!phi_json.empty()) {
      const auto j = nlohmann::json::parse(phi_json);
      if (!j.is_array() || j.size() != pose.joint_rotations.size()) {
        throw ConfigError("phi must be an array of " + std::to_string(pose.joint_rotations.size()) +
                          " [x, y, z] rotations");
      }
      for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != 3) throw ConfigError("phi entries must be [x, y, z]");
        pose.joint_rotations[i] = {j[i][0].get<float>(), j[i][1].get<float>(), j[i][2].get<float>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pose JSON: ") + e.what());
  }
  return pose;
}

std::string mesh_to_obj(std::span<const Vec3> vertices, std::span<const Face> faces,
                        std::span<const std::array<float, 2>> uv) {
  if (!uv.empty() && uv.size() != vertices.size()) throw DimensionError("OBJ export needs one UV per vertex");
  std::ostringstream out;
  char line[128];
  for (const Vec3& v : vertices) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << line;
  }
  for (const auto& t : uv) {
    std::snprintf(line, sizeof(line), "vt %.9g %.9g\n", t[0], t[1]);
    out << line;
  }
  for (const Face& f : faces) {
    if (uv.empty()) {
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    } else {
      out << "f " << f[0] + 1 << '/' << f[0] + 1 << ' ' << f[1] + 1 << '/' << f[1] + 1 << ' ' << f[2] + 1 << '/'
          << f[2] + 1 << '\n';
    }
  }
  return out.str();
}

}  // namespace dualhead
