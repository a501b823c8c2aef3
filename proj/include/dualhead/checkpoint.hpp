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
#include <optional>

#include "dualhead/adam.hpp"
#include "dualhead/chunk_io.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/segmask.hpp"

namespace dualhead {

// Adam moments per parameter group.
struct OptimState {
  AdamGroup texture;
  AdamGroup beta;
  AdamGroup mlp;
  AdamGroup features;

  bool operator==(const OptimState&) const = default;
};

// Everything needed to continue a run: the random draws of every iteration
// derive from (seed, iteration), so no generator state is stored.
struct TrainState {
  AvatarState avatar;
  OptimState optim;
  int64_t iteration = 0;
  uint64_t seed = 0;
  std::optional<MaskLUT> lut;
};

// "CKP1" chunked archive; see ChunkArchive for the container layout.
ChunkArchive checkpoint_to_archive(const TrainState& state);
TrainState checkpoint_from_archive(const ChunkArchive& archive);
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

// Bitwise equality of every optimisation variable.
bool avatar_bits_equal(const AvatarState& a, const AvatarState& b);
// FNV-1a over beta, theta and C.
uint64_t geometry_hash(const AvatarState& state);

}  // namespace dualhead
