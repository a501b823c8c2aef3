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

#include "dualhead/schedule.hpp"

#include <algorithm>

#include "dualhead/errors.hpp"

namespace dualhead {

const char* phase_name(Phase p) { return p == Phase::kDual ? "dual" : "texture"; }

void Schedule::validate() const {
  if (total_iters < 0 || initial_texture_iters < 0 || dual_block < 0 || texture_block < 0) {
    throw ConfigError("schedule lengths must be non-negative");
  }
  if (dual_block + texture_block == 0 && total_iters > initial_texture_iters) {
    throw ConfigError("schedule blocks must not both be empty");
  }
  if (lut_refresh < 1) throw ConfigError("lut_refresh must be positive");
  if (!(azimuth_min <= azimuth_max)) throw ConfigError("azimuth range is empty");
  if (!(camera_radius > 0.0f)) throw ConfigError("camera radius must be positive");
}

Phase phase_of(const Schedule& s, int64_t iteration) {
  if (iteration < s.initial_texture_iters) return Phase::kTextureOnly;
  const int64_t period = s.dual_block + s.texture_block;
  if (period == 0) return Phase::kTextureOnly;
  const int64_t k = (iteration - s.initial_texture_iters) % period;
  return k < s.dual_block ? Phase::kDual : Phase::kTextureOnly;
}

int64_t dual_iterations_before(const Schedule& s, int64_t iteration) {
  if (iteration <= s.initial_texture_iters) return 0;
  const int64_t period = s.dual_block + s.texture_block;
  if (period == 0) return 0;
  const int64_t t = iteration - s.initial_texture_iters;
  return (t / period) * s.dual_block + std::min(t % period, s.dual_block);
}

bool lut_rebuild_due(const Schedule& s, int64_t iteration) {
  return phase_of(s, iteration) == Phase::kDual &&
         dual_iterations_before(s, iteration) % s.lut_refresh == 0;
}

PhaseCounts count_phases(const Schedule& s) {
  PhaseCounts c;
  c.dual = dual_iterations_before(s, s.total_iters);
  c.texture_only = s.total_iters - c.dual;
  return c;
}

std::mt19937_64 iteration_rng(uint64_t seed, int64_t iteration, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(iteration), static_cast<uint32_t>(iteration >> 32),
                    static_cast<uint32_t>(stream)};
  return std::mt19937_64(seq);
}

StepInputs sample_step_inputs(const Schedule& s, size_t dataset_size, const BackgroundOptions& bg,
                              std::mt19937_64& rng) {
  StepInputs in;
  if (dataset_size > 0) {
    std::uniform_int_distribution<size_t> pick(0, dataset_size - 1);
    in.pose_index = pick(rng);
  }
  const double u = std::generate_canonical<double, 53>(rng);
  in.azimuth = s.azimuth_min + (static_cast<double>(s.azimuth_max) - s.azimuth_min) * u;
  in.elevation = s.elevation;
  if (bg.randomize) {
    in.background = sample_background(rng, static_cast<int>(bg.fixed_color.size()), bg.lo, bg.hi);
  } else {
    in.background.color_a = bg.fixed_color;
    in.background.color_b = bg.fixed_color;
  }
  return in;
}

}  // namespace dualhead
