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
#include <random>
#include <string>

#include "dualhead/raster.hpp"

namespace dualhead {

enum class Phase { kTextureOnly, kDual };

const char* phase_name(Phase p);

struct Schedule {
  int64_t total_iters = 20000;
  int64_t initial_texture_iters = 6000;
  int64_t dual_block = 4000;
  int64_t texture_block = 2000;
  int64_t lut_refresh = 2000;  // in dual iterations
  float azimuth_min = -30.0f;
  float azimuth_max = 30.0f;
  float elevation = 0.0f;
  float camera_radius = 0.7f;

  void validate() const;
};

// [0, initial) texture-only, then repeating dual / texture blocks.
Phase phase_of(const Schedule& s, int64_t iteration);

// Number of dual iterations strictly before `iteration`.
int64_t dual_iterations_before(const Schedule& s, int64_t iteration);

// True on dual iterations whose dual index is a multiple of lut_refresh.
bool lut_rebuild_due(const Schedule& s, int64_t iteration);

struct PhaseCounts {
  int64_t texture_only = 0;
  int64_t dual = 0;
};
PhaseCounts count_phases(const Schedule& s);

// Generator for everything random in one iteration; depends only on
// (seed, iteration, stream), so a resumed run replays the same draws.
std::mt19937_64 iteration_rng(uint64_t seed, int64_t iteration, uint64_t stream = 0);

struct BackgroundOptions {
  bool randomize = true;
  float lo = -1.0f;  // feature-space colour range
  float hi = 1.0f;
  std::vector<float> fixed_color{0.0f, 0.0f, 0.0f, 0.0f};
};

struct StepInputs {
  size_t pose_index = 0;
  double azimuth = 0.0;
  double elevation = 0.0;
  BackgroundSpec background;
};

// Uniform pose record (if dataset_size > 0), azimuth uniform in range,
// elevation from the schedule, background per options.
StepInputs sample_step_inputs(const Schedule& s, size_t dataset_size, const BackgroundOptions& bg,
                              std::mt19937_64& rng);

}  // namespace dualhead
