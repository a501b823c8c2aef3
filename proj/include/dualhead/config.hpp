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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dualhead/adam.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/objective.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/schedule.hpp"
#include "dualhead/segmask.hpp"

namespace dualhead {

struct GuidanceConfig {
  std::string kind = "analytic";  // analytic | mock | remote
  std::string prompt;
  std::string prompt_prefix = "a photo of the face of";
  float t_min = 0.02f;
  float t_max = 0.98f;
  float cfg_scale = 100.0f;
  std::string endpoint = "http://127.0.0.1:8765";
  double timeout_s = 60.0;
  int retries = 2;
  double mock_max_norm = 1.0;
  // Analytic target feature image (TNS1). Empty: rendered from target_texture
  // or, failing that, from the initial avatar.
  std::string target_path;
  std::string target_texture_path;
};

struct RenderConfig {
  int feature_resolution = 64;
  int hi_resolution = 512;
  float fov_deg = 25.0f;
  float near = 0.01f;
  float far = 10.0f;
  Vec3 light_dir{0.3f, 0.4f, 1.0f};
  // Soft silhouette used by the segmentation loss; its width and height
  // default to the feature resolution.
  RasterSettings soft{RasterMode::kSoft, 1e-4f, 1e-4f, 75, 64, 64, 1e-7};
};

struct SegmentConfig {
  std::string kind = "builtin";  // builtin | remote
  float threshold = 0.1f;
  LutSpec lut;
};

struct RunConfig {
  uint64_t seed = 0;
  Schedule schedule;
  AlphaSchedule alpha;
  RegWeights weights;
  float lr_texture = 8e-3f;
  float lr_geometry = 1e-4f;
  AdamConfig adam;
  RenderConfig render;
  BackgroundOptions background;
  AvatarInit init;
  GuidanceConfig guidance;
  SegmentConfig segment;
  int64_t checkpoint_every = 1000;  // 0 disables periodic checkpoints
  int64_t preview_every = 0;        // 0 disables preview PNGs
  std::string model_path;           // empty: built-in desk model
  std::string pose_dataset_path;    // empty: neutral pose only
  std::string decoder_path;         // empty: default decoder

  // Throws ConfigError on any invalid value.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(std::string_view text);
std::string run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// Small model, 16x16 features and a short schedule for quick runs.
RunConfig desk_preset();

struct PoseRecord {
  std::vector<float> psi;
  std::vector<Vec3> phi;
};

struct PoseDataset {
  std::vector<PoseRecord> records;
  std::string source;

  // Non-empty, finite and sized for `model`; throws ConfigError otherwise.
  void validate(const HeadModel& model) const;
  ArticulationPose pose(size_t i) const { return {records.at(i).psi, records.at(i).phi}; }
};

// JSON lines, each {"psi": [...], "phi": [...]} with phi flattened [J * 3].
PoseDataset pose_dataset_from_jsonl(std::string_view text, std::string source = {});
std::string pose_dataset_to_jsonl(const PoseDataset& dataset);
PoseDataset load_pose_dataset(const std::filesystem::path& path);

// Seeded small-amplitude expressions and jaw/neck rotations.
PoseDataset make_desk_pose_dataset(const HeadModel& model, size_t count, uint64_t seed);

}  // namespace dualhead
