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

#include <filesystem>

#include "dualhead/chunk_io.hpp"
#include "dualhead/head_model.hpp"

namespace dualhead {

// HeadModel <-> "HDM1" chunk archive. Chunk names:
//   template_vertices f32[V,3]   faces i32[F,3]
//   shape_basis f32[V,3,nb]      expression_basis f32[V,3,ne]
//   pose_basis f32[V,3,9(J-1)]   joint_positions f32[J,3]   joint_parents i32[J]
//   skinning_weights f32[V,J]    uv_coords f32[V,2]         region_labels u8[V]
// Optional edits applied on load:
//   face_keep_mask u8[F] (0 drops the face)   extra_faces i32[E,3]
ChunkArchive model_to_archive(const HeadModel& model);
HeadModel model_from_archive(const ChunkArchive& archive);

void save_model(const std::filesystem::path& path, const HeadModel& model);
HeadModel load_model(const std::filesystem::path& path);

}  // namespace dualhead
