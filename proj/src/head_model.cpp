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

#include "dualhead/head_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualhead/errors.hpp"

namespace dualhead {

const char* region_name(Region r) {
  switch (r) {
    case Region::kScalp:
      return "scalp";
    case Region::kFace:
      return "face";
    case Region::kForehead:
      return "forehead";
    case Region::kOther:
      return "other";
  }
  return "other";
}

void HeadModel::validate() const {
  const size_t v = num_vertices();
  const size_t j = num_joints();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw DimensionError("HeadModel: " + what);
  };
  need(v > 0, "no vertices");
  need(shape_basis.size() == v * 3 * static_cast<size_t>(num_shape), "shape_basis size");
  need(expression_basis.size() == v * 3 * static_cast<size_t>(num_expression),
       "expression_basis size");
  need(pose_basis.size() == v * 3 * static_cast<size_t>(num_pose_corrective()),
       "pose_basis size");
  need(j > 0, "no joints");
  need(joint_parents.size() == j, "joint_parents size");
  need(skinning_weights.size() == v * j, "skinning_weights size");
  need(uv.size() == v, "uv size");
  need(regions.size() == v, "region label count");
  for (size_t k = 0; k < j; ++k) {
    const int32_t p = joint_parents[k];
    need(k == 0 ? p == -1 : (p >= 0 && static_cast<size_t>(p) < k),
         "joint parents must be topologically ordered with a single root");
  }
  for (size_t i = 0; i < v; ++i) {
    double sum = 0.0;
    for (size_t k = 0; k < j; ++k) {
      const float w = skinning_weights[i * j + k];
      if (!(w >= 0.0f)) throw MeshError("negative skinning weight at vertex " + std::to_string(i));
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-5) {
      throw MeshError("skinning weights of vertex " + std::to_string(i) + " do not sum to 1");
    }
    const auto& t = uv[i];
    if (!(t[0] >= 0.0f && t[0] <= 1.0f && t[1] >= 0.0f && t[1] <= 1.0f)) {
      throw MeshError("uv of vertex " + std::to_string(i) + " outside [0,1]^2");
    }
    if (static_cast<uint8_t>(regions[i]) > 3) throw MeshError("unknown region label");
  }
  check_edge_manifold(faces, v);
}

bool ArticulationPose::is_rest() const {
  return std::all_of(joint_rotations.begin(), joint_rotations.end(),
                     [](const Vec3& r) { return r.x == 0.0f && r.y == 0.0f && r.z == 0.0f; });
}

HeadModel subdivide4(const HeadModel& model) {
  const size_t v = model.num_vertices();
  const auto sub = subdivide4_topology(model.faces, v);
  HeadModel out = model;
  out.faces = sub.faces;

  std::vector<float> pos(v * 3);
  for (size_t i = 0; i < v; ++i)
    for (int a = 0; a < 3; ++a) pos[i * 3 + a] = model.template_vertices[i][a];
  interpolate_midpoints(pos, 3, sub);
  out.template_vertices.resize(pos.size() / 3);
  for (size_t i = 0; i < out.template_vertices.size(); ++i) {
    out.template_vertices[i] = {pos[i * 3], pos[i * 3 + 1], pos[i * 3 + 2]};
  }

  interpolate_midpoints(out.shape_basis, 3 * static_cast<size_t>(model.num_shape), sub);
  interpolate_midpoints(out.expression_basis, 3 * static_cast<size_t>(model.num_expression), sub);
  interpolate_midpoints(out.pose_basis, 3 * static_cast<size_t>(model.num_pose_corrective()), sub);

  const size_t j = model.num_joints();
  interpolate_midpoints(out.skinning_weights, j, sub);
  for (size_t i = v; i < out.template_vertices.size(); ++i) {
    float* row = out.skinning_weights.data() + i * j;
    double sum = 0.0;
    for (size_t k = 0; k < j; ++k) sum += row[k];
    for (size_t k = 0; k < j; ++k) row[k] = static_cast<float>(row[k] / sum);
  }

  std::vector<float> uv(v * 2);
  for (size_t i = 0; i < v; ++i) {
    uv[i * 2] = model.uv[i][0];
    uv[i * 2 + 1] = model.uv[i][1];
  }
  interpolate_midpoints(uv, 2, sub);
  out.uv.resize(uv.size() / 2);
  for (size_t i = 0; i < out.uv.size(); ++i) out.uv[i] = {uv[i * 2], uv[i * 2 + 1]};

  for (const auto& [a, b] : sub.edge_parents) out.regions.push_back(model.regions[a]);
  return out;
}

void apply_face_edits(HeadModel& model, std::span<const uint8_t> keep_mask,
                      std::span<const Face> extra_faces) {
  if (!keep_mask.empty()) {
    if (keep_mask.size() != model.faces.size()) {
      throw DimensionError("face keep mask length does not match face count");
    }
    std::vector<Face> kept;
    kept.reserve(model.faces.size());
    for (size_t f = 0; f < model.faces.size(); ++f) {
      if (keep_mask[f]) kept.push_back(model.faces[f]);
    }
    model.faces = std::move(kept);
  }
  model.faces.insert(model.faces.end(), extra_faces.begin(), extra_faces.end());
}

namespace {

void add_basis(std::vector<Vec3>& verts, const std::vector<float>& basis, int n,
               std::span<const float> coeffs) {
  if (n == 0) return;
  for (size_t i = 0; i < verts.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const float* row = basis.data() + (i * 3 + a) * static_cast<size_t>(n);
      float acc = 0.0f;
      for (int k = 0; k < n; ++k) acc += row[k] * coeffs[k];
      verts[i][a] += acc;
    }
  }
}

std::vector<float> pose_features(const HeadModel& model, std::span<const Vec3> phi) {
  std::vector<float> feat;
  feat.reserve(static_cast<size_t>(model.num_pose_corrective()));
  for (size_t j = 1; j < model.num_joints(); ++j) {
    const Mat3 r = rotation_from_axis_angle(phi[j]);
    const Mat3 eye = Mat3::identity();
    for (int k = 0; k < 9; ++k) feat.push_back(r.m[k] - eye.m[k]);
  }
  return feat;
}

void check_pose_sizes(const HeadModel& model, std::span<const float> beta,
                      std::span<const float> psi, std::span<const Vec3> phi) {
  if (beta.size() != static_cast<size_t>(model.num_shape)) {
    throw DimensionError("beta has " + std::to_string(beta.size()) + " entries, model expects " +
                         std::to_string(model.num_shape));
  }
  if (psi.size() != static_cast<size_t>(model.num_expression)) {
    throw DimensionError("psi has " + std::to_string(psi.size()) + " entries, model expects " +
                         std::to_string(model.num_expression));
  }
  if (phi.size() != model.num_joints()) {
    throw DimensionError("phi has " + std::to_string(phi.size()) + " joints, model has " +
                         std::to_string(model.num_joints()));
  }
}

bool all_zero_rotations(std::span<const Vec3> phi) {
  return std::all_of(phi.begin(), phi.end(),
                     [](const Vec3& r) { return r.x == 0.0f && r.y == 0.0f && r.z == 0.0f; });
}

}  // namespace

std::vector<Vec3> blendshape(const HeadModel& model, std::span<const float> beta,
                             std::span<const float> psi, std::span<const Vec3> phi) {
  check_pose_sizes(model, beta, psi, phi);
  std::vector<Vec3> verts = model.template_vertices;
  add_basis(verts, model.shape_basis, model.num_shape, beta);
  add_basis(verts, model.expression_basis, model.num_expression, psi);
  const auto feat = pose_features(model, phi);
  add_basis(verts, model.pose_basis, model.num_pose_corrective(), feat);
  return verts;
}

std::vector<RigidTransform> skinning_transforms(const HeadModel& model,
                                                std::span<const Vec3> phi) {
  const size_t j = model.num_joints();
  if (phi.size() != j) throw DimensionError("phi joint count mismatch");
  std::vector<RigidTransform> world(j);
  for (size_t k = 0; k < j; ++k) {
    const int32_t p = model.joint_parents[k];
    const Vec3 offset = p < 0 ? model.joint_positions[k]
                              : model.joint_positions[k] - model.joint_positions[p];
    const RigidTransform local{rotation_from_axis_angle(phi[k]), offset};
    world[k] = p < 0 ? local : world[p].then(local);
  }
  std::vector<RigidTransform> rel(j);
  for (size_t k = 0; k < j; ++k) {
    rel[k].rotation = world[k].rotation;
    rel[k].translation = world[k].translation - world[k].rotation * model.joint_positions[k];
  }
  return rel;
}

std::vector<Vec3> lbs(const HeadModel& model, std::span<const Vec3> vertices_rest,
                      std::span<const Vec3> phi) {
  if (vertices_rest.size() != model.num_vertices()) {
    throw DimensionError("lbs: vertex count mismatch");
  }
  // The rest pose is the identity exactly, not merely to rounding.
  if (all_zero_rotations(phi)) return {vertices_rest.begin(), vertices_rest.end()};
  const auto xf = skinning_transforms(model, phi);
  const size_t j = model.num_joints();
  std::vector<Vec3> out(vertices_rest.size());
  for (size_t i = 0; i < vertices_rest.size(); ++i) {
    Vec3 acc;
    for (size_t k = 0; k < j; ++k) {
      const float w = model.skinning_weights[i * j + k];
      if (w == 0.0f) continue;
      acc += xf[k].apply(vertices_rest[i]) * w;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<Vec3> lbs_backward(const HeadModel& model, std::span<const Vec3> phi,
                               std::span<const Vec3> posed_adjoint) {
  if (all_zero_rotations(phi)) return {posed_adjoint.begin(), posed_adjoint.end()};
  const auto xf = skinning_transforms(model, phi);
  const size_t j = model.num_joints();
  std::vector<Vec3> out(posed_adjoint.size());
  for (size_t i = 0; i < posed_adjoint.size(); ++i) {
    Vec3 acc;
    for (size_t k = 0; k < j; ++k) {
      const float w = model.skinning_weights[i * j + k];
      if (w == 0.0f) continue;
      acc += (transpose(xf[k].rotation) * posed_adjoint[i]) * w;
    }
    out[i] = acc;
  }
  return out;
}

PoseEvaluation posed_vertices(const HeadModel& model, const AvatarState& state,
                              const ArticulationPose& pose) {
  const size_t v = model.num_vertices();
  const int d = state.feature_dim();
  state.features.expect_shape({static_cast<int64_t>(v), d}, "vertex features");
  if (!state.base_offsets.empty() && state.base_offsets.size() != v) {
    throw DimensionError("base offsets vertex count mismatch");
  }

  PoseEvaluation ev;
  ev.joint_rotations = pose.joint_rotations;
  ev.mlp_input = Tensor({static_cast<int64_t>(v), 3 + d});
  for (size_t i = 0; i < v; ++i) {
    float* row = ev.mlp_input.data() + i * static_cast<size_t>(3 + d);
    row[0] = model.template_vertices[i].x;
    row[1] = model.template_vertices[i].y;
    row[2] = model.template_vertices[i].z;
    std::copy_n(state.features.data() + i * static_cast<size_t>(d), d, row + 3);
  }
  ev.mlp_offsets = mlp_forward(state.mlp, ev.mlp_input, &ev.mlp_trace);

  ev.rest = model.template_vertices;
  if (!state.base_offsets.empty()) {
    for (size_t i = 0; i < v; ++i) ev.rest[i] += state.base_offsets[i];
  }
  check_pose_sizes(model, state.beta, pose.expression, pose.joint_rotations);
  add_basis(ev.rest, model.shape_basis, model.num_shape, state.beta);
  add_basis(ev.rest, model.expression_basis, model.num_expression, pose.expression);
  const auto feat = pose_features(model, pose.joint_rotations);
  add_basis(ev.rest, model.pose_basis, model.num_pose_corrective(), feat);
  for (size_t i = 0; i < v; ++i) {
    ev.rest[i] += Vec3{ev.mlp_offsets.at(i, 0), ev.mlp_offsets.at(i, 1), ev.mlp_offsets.at(i, 2)};
  }
  ev.posed = lbs(model, ev.rest, pose.joint_rotations);
  return ev;
}

GeometryGradients GeometryGradients::zeros_like(const AvatarState& state) {
  GeometryGradients g;
  g.beta.assign(state.beta.size(), 0.0f);
  g.mlp.assign(state.mlp.parameter_count(), 0.0f);
  g.features = Tensor::zeros_like(state.features);
  return g;
}

void GeometryGradients::accumulate(const GeometryGradients& other) {
  if (other.beta.size() != beta.size() || other.mlp.size() != mlp.size() ||
      other.features.shape() != features.shape()) {
    throw DimensionError("GeometryGradients::accumulate: shape mismatch");
  }
  for (size_t i = 0; i < beta.size(); ++i) beta[i] += other.beta[i];
  for (size_t i = 0; i < mlp.size(); ++i) mlp[i] += other.mlp[i];
  for (size_t i = 0; i < features.size(); ++i) features[i] += other.features[i];
}

bool GeometryGradients::all_zero() const {
  auto zero = [](float x) { return x == 0.0f; };
  return std::all_of(beta.begin(), beta.end(), zero) && std::all_of(mlp.begin(), mlp.end(), zero) &&
         std::all_of(features.values().begin(), features.values().end(), zero);
}

GeometryGradients posed_vertices_backward(const HeadModel& model, const AvatarState& state,
                                          const PoseEvaluation& eval,
                                          std::span<const Vec3> posed_adjoint,
                                          std::span<const Vec3> offset_adjoint) {
  const size_t v = model.num_vertices();
  if (posed_adjoint.size() != v) throw DimensionError("posed adjoint vertex count mismatch");
  if (!offset_adjoint.empty() && offset_adjoint.size() != v) {
    throw DimensionError("offset adjoint vertex count mismatch");
  }
  const auto rest_adj = lbs_backward(model, eval.joint_rotations, posed_adjoint);

  GeometryGradients g = GeometryGradients::zeros_like(state);
  const int nb = model.num_shape;
  for (size_t i = 0; i < v; ++i) {
    for (int a = 0; a < 3; ++a) {
      const float* row = model.shape_basis.data() + (i * 3 + a) * static_cast<size_t>(nb);
      for (int k = 0; k < nb; ++k) g.beta[k] += row[k] * rest_adj[i][a];
    }
  }

  Tensor off_adj({static_cast<int64_t>(v), 3});
  for (size_t i = 0; i < v; ++i) {
    for (int a = 0; a < 3; ++a) {
      off_adj.at(i, a) = rest_adj[i][a] + (offset_adjoint.empty() ? 0.0f : offset_adjoint[i][a]);
    }
  }
  const auto mg = mlp_backward(state.mlp, eval.mlp_input, eval.mlp_trace, off_adj);
  size_t k = 0;
  for (const auto& layer : mg.layers) {
    std::copy(layer.weight.begin(), layer.weight.end(), g.mlp.begin() + k);
    k += layer.weight.size();
    std::copy(layer.bias.begin(), layer.bias.end(), g.mlp.begin() + k);
    k += layer.bias.size();
  }
  const int d = state.feature_dim();
  for (size_t i = 0; i < v; ++i) {
    for (int c = 0; c < d; ++c) g.features.at(i, c) = mg.input.at(i, 3 + c);
  }
  return g;
}

namespace {

float smoothstep(float e0, float e1, float x) {
  const float t = std::clamp((x - e0) / (e1 - e0), 0.0f, 1.0f);
  return t * t * (3.0f - 2.0f * t);
}

}  // namespace

HeadModel make_desk_model(const DeskModelSpec& spec) {
  if (spec.subdivisions < 0 || spec.radius <= 0.0f || spec.num_shape < 4 ||
      spec.num_expression < 4) {
    throw ConfigError("desk model needs subdivisions >= 0, radius > 0, >= 4 shape and "
                      ">= 4 expression components");
  }
  const TriMesh sphere = make_icosphere(spec.subdivisions, 1.0f);
  const float r = spec.radius;
  HeadModel m;
  m.faces = sphere.faces;
  const size_t v = sphere.vertices.size();
  m.template_vertices.resize(v);
  std::vector<Vec3> dirs = sphere.vertices;
  for (size_t i = 0; i < v; ++i) {
    const Vec3& d = dirs[i];
    m.template_vertices[i] = {d.x * spec.axes.x * r, d.y * spec.axes.y * r, d.z * spec.axes.z * r};
  }

  // Joints: root at the neck, jaw hinge in front of and above it.
  m.joint_positions = {{0.0f, -0.8f * r, -0.1f * r}, {0.0f, -0.25f * r, 0.15f * r}};
  m.joint_parents = {-1, 0};
  const size_t j = m.num_joints();

  // Regional weights over the unit direction: lower front (jaw/mouth),
  // upper front (brow), cheeks.
  std::vector<float> jaw(v), brow(v), cheek(v);
  for (size_t i = 0; i < v; ++i) {
    const Vec3& d = dirs[i];
    jaw[i] = smoothstep(-0.1f, -0.5f, d.y) * smoothstep(0.0f, 0.5f, d.z);
    brow[i] = smoothstep(0.1f, 0.35f, d.y) * smoothstep(0.75f, 0.5f, d.y) * smoothstep(0.2f, 0.7f, d.z);
    cheek[i] = smoothstep(0.3f, 0.6f, std::abs(d.x)) * smoothstep(0.4f, 0.0f, std::abs(d.y)) *
               smoothstep(-0.2f, 0.3f, d.z);
  }

  m.skinning_weights.assign(v * j, 0.0f);
  for (size_t i = 0; i < v; ++i) {
    m.skinning_weights[i * j + 1] = jaw[i];
    m.skinning_weights[i * j + 0] = 1.0f - jaw[i];
  }

  const int ns = spec.num_shape;
  m.num_shape = ns;
  m.shape_basis.assign(v * 3 * ns, 0.0f);
  auto shape_at = [&](size_t i, int a, int k) -> float& {
    return m.shape_basis[(i * 3 + a) * ns + k];
  };
  for (size_t i = 0; i < v; ++i) {
    const Vec3& p = m.template_vertices[i];
    const Vec3& d = dirs[i];
    // Axis stretches: coefficient 0.1 stretches that axis by 10%.
    shape_at(i, 0, 0) = p.x;
    shape_at(i, 1, 1) = p.y;
    shape_at(i, 2, 2) = p.z;
    // Smooth radial bulge of the crown.
    const float crown = 0.5f * r * d.y * d.y * (d.y > 0.0f ? 1.0f : 0.0f);
    for (int a = 0; a < 3; ++a) shape_at(i, a, 3) = crown * d[a];
    // Further components: low-frequency radial harmonics.
    for (int k = 4; k < ns; ++k) {
      const float amp = 0.2f * r * std::cos(static_cast<float>(k - 2) * std::acos(d.y)) *
                        std::cos(static_cast<float>(k - 3) * std::atan2(d.x, d.z));
      for (int a = 0; a < 3; ++a) shape_at(i, a, k) = amp * d[a];
    }
  }

  const int ne = spec.num_expression;
  m.num_expression = ne;
  m.expression_basis.assign(v * 3 * ne, 0.0f);
  auto expr_at = [&](size_t i, int a, int k) -> float& {
    return m.expression_basis[(i * 3 + a) * ne + k];
  };
  for (size_t i = 0; i < v; ++i) {
    const Vec3& d = dirs[i];
    expr_at(i, 1, 0) = -0.3f * r * jaw[i];                  // mouth open
    expr_at(i, 0, 1) = 0.25f * r * jaw[i] * d.x;            // smile / widen
    expr_at(i, 1, 1) = 0.1f * r * jaw[i] * std::abs(d.x);
    expr_at(i, 1, 2) = 0.2f * r * brow[i];                  // brow raise
    for (int a = 0; a < 3; ++a) expr_at(i, a, 3) = 0.15f * r * cheek[i] * d[a];  // puff
    for (int k = 4; k < ne; ++k) {
      expr_at(i, 2, k) = 0.05f * r * jaw[i] * std::sin(static_cast<float>(k) * d.x);
    }
  }

  const int np = m.num_pose_corrective();
  m.pose_basis.assign(v * 3 * np, 0.0f);
  for (size_t i = 0; i < v; ++i) {
    const Vec3& d = dirs[i];
    for (int k = 0; k < np; ++k) {
      const float amp = 0.05f * r * jaw[i] * (1.0f - static_cast<float>(k) / np);
      for (int a = 0; a < 3; ++a) m.pose_basis[(i * 3 + a) * np + k] = amp * d[a];
    }
  }

  m.uv.resize(v);
  m.regions.resize(v);
  constexpr float kPi = std::numbers::pi_v<float>;
  for (size_t i = 0; i < v; ++i) {
    const Vec3& d = dirs[i];
    const float lat = std::asin(std::clamp(d.y, -1.0f, 1.0f));
    // Seam at the back of the head (azimuth +-180 degrees).
    const float u = std::clamp(0.5f + std::atan2(d.x, d.z) / (2.0f * kPi), 0.0f, 1.0f);
    const float vv = std::clamp(0.5f + lat / kPi, 0.0f, 1.0f);
    m.uv[i] = {u, vv};
    const float deg = lat * 180.0f / kPi;
    if (deg > 50.0f) {
      m.regions[i] = Region::kScalp;
    } else if (deg > 25.0f) {
      m.regions[i] = Region::kForehead;
    } else if (deg > -35.0f) {
      m.regions[i] = Region::kFace;
    } else {
      m.regions[i] = Region::kOther;
    }
  }
  m.validate();
  return m;
}

AvatarState initialize_avatar(const HeadModel& model, const AvatarInit& init,
                              std::mt19937_64& rng) {
  if (init.feature_dim < 1 || init.texture_size < 1) {
    throw ConfigError("feature_dim and texture_size must be positive");
  }
  AvatarState s;
  s.beta.assign(static_cast<size_t>(model.num_shape), 0.0f);
  s.mlp = make_offset_mlp(init.feature_dim, rng);
  s.features = Tensor({static_cast<int64_t>(model.num_vertices()), init.feature_dim});
  std::normal_distribution<float> gauss(0.0f, init.feature_sigma);
  for (float& c : s.features.storage()) c = gauss(rng);
  s.texture = Tensor({kTextureChannels, init.texture_size, init.texture_size});
  if (init.enlarge_iterations > 0) {
    s.base_offsets = enlarge_template(model.template_vertices, model.faces, init.enlarge_strength,
                                      init.enlarge_iterations);
  } else {
    s.base_offsets.assign(model.num_vertices(), Vec3{});
  }
  return s;
}

}  // namespace dualhead
