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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualhead/geometry.hpp"
#include "dualhead/mesh.hpp"
#include "dualhead/mlp.hpp"
#include "dualhead/tensor.hpp"

namespace dualhead {

enum class Region : uint8_t { kScalp = 0, kFace = 1, kForehead = 2, kOther = 3 };

const char* region_name(Region r);

// The parametric articulated head. Immutable after construction.
//
// Basis layouts are [V, 3, n] row-major: displacement of vertex v along axis a
// for coefficient k lives at (v * 3 + a) * n + k. Skinning weights are [V, J].
struct HeadModel {
  std::vector<Vec3> template_vertices;
  std::vector<Face> faces;
  int num_shape = 0;
  int num_expression = 0;
  std::vector<float> shape_basis;
  std::vector<float> expression_basis;
  // Columns are the (R - I) entries of every non-root joint, 9 per joint.
  std::vector<float> pose_basis;
  std::vector<Vec3> joint_positions;
  std::vector<int32_t> joint_parents;  // -1 for the root; parents precede children
  std::vector<float> skinning_weights;
  std::vector<std::array<float, 2>> uv;
  std::vector<Region> regions;

  size_t num_vertices() const { return template_vertices.size(); }
  size_t num_joints() const { return joint_positions.size(); }
  int num_pose_corrective() const {
    return num_joints() > 0 ? 9 * static_cast<int>(num_joints() - 1) : 0;
  }

  // Throws MeshError / DimensionError if any invariant is violated.
  void validate() const;
};

struct ArticulationPose {
  std::vector<float> expression;        // psi
  std::vector<Vec3> joint_rotations;    // phi, axis-angle radians per joint

  static ArticulationPose neutral(const HeadModel& model) {
    return {std::vector<float>(static_cast<size_t>(model.num_expression), 0.0f),
            std::vector<Vec3>(model.num_joints())};
  }
  bool is_rest() const;
};

inline constexpr int kFeatureDim = 32;
inline constexpr int kTextureSize = 512;
inline constexpr int kTextureChannels = 4;

// All optimisation variables of one avatar.
struct AvatarState {
  std::vector<float> beta;
  MlpParams mlp;
  Tensor features;  // [V, d]
  Tensor texture;   // [4, S, S]
  // Fixed enlargement applied on top of the template; not optimised.
  std::vector<Vec3> base_offsets;

  int feature_dim() const { return static_cast<int>(features.dim(1)); }
};

// Four-way subdivision of every model attribute. Skinning rows are
// renormalised; region labels come from the lower-index parent vertex.
HeadModel subdivide4(const HeadModel& model);

// Removes faces where keep_mask == 0 and appends extra faces, then drops
// nothing else; vertex indexing is unchanged.
void apply_face_edits(HeadModel& model, std::span<const uint8_t> keep_mask,
                      std::span<const Face> extra_faces);

// T + shape_basis beta + expression_basis psi + pose_basis f(phi).
std::vector<Vec3> blendshape(const HeadModel& model, std::span<const float> beta,
                             std::span<const float> psi, std::span<const Vec3> phi);

// Per-joint skinning transforms A_j relative to the rest pose.
std::vector<RigidTransform> skinning_transforms(const HeadModel& model,
                                                std::span<const Vec3> phi);

std::vector<Vec3> lbs(const HeadModel& model, std::span<const Vec3> vertices_rest,
                      std::span<const Vec3> phi);

// Adjoint of lbs with respect to the rest vertices (pose held fixed).
std::vector<Vec3> lbs_backward(const HeadModel& model, std::span<const Vec3> phi,
                               std::span<const Vec3> posed_adjoint);

// Forward record of V(psi, phi) = LBS(B(beta, psi, phi) + base + G([T; C])).
struct PoseEvaluation {
  Tensor mlp_input;    // [V, 3 + d]
  MlpTrace mlp_trace;
  Tensor mlp_offsets;  // [V, 3]
  std::vector<Vec3> rest;
  std::vector<Vec3> posed;
  std::vector<Vec3> joint_rotations;
};

PoseEvaluation posed_vertices(const HeadModel& model, const AvatarState& state,
                              const ArticulationPose& pose);

struct GeometryGradients {
  std::vector<float> beta;
  std::vector<float> mlp;  // flat, MlpParams::flatten order
  Tensor features;         // [V, d]

  static GeometryGradients zeros_like(const AvatarState& state);
  void accumulate(const GeometryGradients& other);
  bool all_zero() const;
};

// Adjoints for beta, theta and C given dL/d(posed vertices) plus an optional
// direct adjoint on the MLP offsets.
GeometryGradients posed_vertices_backward(const HeadModel& model, const AvatarState& state,
                                          const PoseEvaluation& eval,
                                          std::span<const Vec3> posed_adjoint,
                                          std::span<const Vec3> offset_adjoint = {});

struct DeskModelSpec {
  int subdivisions = 2;
  float radius = 0.1f;
  // Per-axis scale of the base sphere; (1,1,1) gives a plain sphere.
  Vec3 axes{0.92f, 1.08f, 1.0f};
  int num_shape = 4;
  int num_expression = 4;
};

// Deterministic synthetic head with the full HeadModel schema.
HeadModel make_desk_model(const DeskModelSpec& spec = {});

struct AvatarInit {
  int feature_dim = kFeatureDim;
  int texture_size = kTextureSize;
  float feature_sigma = 0.02f;
  float enlarge_strength = -0.5f;
  int enlarge_iterations = 0;
};

AvatarState initialize_avatar(const HeadModel& model, const AvatarInit& init,
                              std::mt19937_64& rng);

}  // namespace dualhead
