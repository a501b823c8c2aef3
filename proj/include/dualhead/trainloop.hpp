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
#include <functional>
#include <string>
#include <vector>

#include "dualhead/checkpoint.hpp"
#include "dualhead/config.hpp"
#include "dualhead/decode.hpp"
#include "dualhead/guidance.hpp"
#include "dualhead/objective.hpp"
#include "dualhead/schedule.hpp"
#include "dualhead/segmask.hpp"

namespace dualhead {

struct EventRecord {
  int64_t iteration = 0;
  std::string kind;  // phase | lut_rebuild | lut_warning | skip | checkpoint | abort
  std::string detail;
};

struct StepLog {
  int64_t iteration = 0;
  Phase phase = Phase::kTextureOnly;
  double alpha = 0.0;
  double azimuth = 0.0;
  double guidance_norm = 0.0;
  GeometryLossParts geometry;
  uint32_t texture_sources = 0;   // GradSource bits that reached the texture
  uint32_t geometry_sources = 0;  // GradSource bits that reached beta, theta, C
  bool skipped = false;
};

Camera make_camera(const RenderConfig& render, float radius, double azimuth, double elevation);

// Drives the alternating texture-only / dual schedule over a TrainState.
class Trainer {
 public:
  Trainer(const HeadModel& model, RunConfig config, const GuidanceProvider& guidance,
          const MaskReferenceSource& masks, PoseDataset poses, LinearDecoder decoder);

  // Fresh avatar and optimiser state from config.seed.
  TrainState initial_state() const;

  // Runs one iteration and advances state.iteration.
  StepLog step(TrainState& state);

  // Steps until state.iteration reaches min(stop_at, total_iters). With an
  // output directory, writes periodic checkpoints, previews, the loss CSV
  // and the event log there.
  void run(TrainState& state, int64_t stop_at, const std::filesystem::path& out_dir = {});

  const std::vector<EventRecord>& events() const { return events_; }
  const std::vector<StepLog>& log() const { return log_; }
  const RunConfig& config() const { return config_; }
  const GeometryContext& geometry_context() const { return geometry_; }

  // Feature image of `state` at one camera pose, hi-lo path, fixed backdrop.
  Tensor render_features_at(const AvatarState& state, const ArticulationPose& pose, double azimuth,
                            double elevation) const;

 private:
  void emit(int64_t iteration, std::string kind, std::string detail);

  const HeadModel& model_;
  RunConfig config_;
  const GuidanceProvider& guidance_;
  const MaskReferenceSource& masks_;
  PoseDataset poses_;
  LinearDecoder decoder_;
  GeometryContext geometry_;
  std::vector<EventRecord> events_;
  std::vector<StepLog> log_;
};

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepLog>& log);
void write_event_log(const std::filesystem::path& path, const std::vector<EventRecord>& events);

}  // namespace dualhead
