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

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "dualhead/errors.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/mesh.hpp"
#include "dualhead/model_io.hpp"

using namespace dualhead;

namespace {

// Tetrahedron with two joints: vertices 0,1 follow the root at the origin,
// vertices 2,3 follow a child joint at (0, 1, 0).
HeadModel tiny_model() {
  HeadModel m;
  m.template_vertices = {{0, 0, 1}, {1, 0, -1}, {-1, 2, -1}, {0.5f, 1.5f, 0.5f}};
  m.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
  m.num_shape = 1;
  m.num_expression = 1;
  m.shape_basis.assign(4 * 3, 0.0f);
  m.expression_basis.assign(4 * 3, 0.0f);
  m.pose_basis.assign(4 * 3 * 9, 0.0f);
  m.joint_positions = {{0, 0, 0}, {0, 1, 0}};
  m.joint_parents = {-1, 0};
  m.skinning_weights = {1, 0, 1, 0, 0, 1, 0, 1};
  m.uv = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  m.regions = {Region::kScalp, Region::kFace, Region::kForehead, Region::kOther};
  m.validate();
  return m;
}

Vec3 rotate_about(const Mat3& r, const Vec3& pivot, const Vec3& p) { return r * (p - pivot) + pivot; }

void check_near(const Vec3& a, const Vec3& b, double tol) {
  CHECK(std::abs(a.x - b.x) <= tol);
  CHECK(std::abs(a.y - b.y) <= tol);
  CHECK(std::abs(a.z - b.z) <= tol);
}

}  // namespace

TEST_CASE("icosphere topology") {
  const TriMesh ico = make_icosahedron();
  CHECK(ico.vertices.size() == 12);
  CHECK(ico.faces.size() == 20);
  const VertexAdjacency adj = build_adjacency(ico.faces, 12);
  for (size_t v = 0; v < 12; ++v) CHECK(adj.of(v).size() == 5);
  CHECK(unique_edges(ico.faces).size() == 30);
  const TriMesh s2 = make_icosphere(2, 0.5f);
  CHECK(s2.vertices.size() == 162);
  CHECK(s2.faces.size() == 320);
  for (const Vec3& v : s2.vertices) CHECK(norm(v) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_NOTHROW(check_edge_manifold(s2.faces, s2.vertices.size()));
  CHECK_FALSE(mesh_self_intersects(s2.vertices, s2.faces));
}

TEST_CASE("edge manifold violations are rejected") {
  const std::vector<Face> fan{{0, 1, 2}, {0, 1, 3}, {1, 0, 4}};
  CHECK_THROWS_AS(check_edge_manifold(fan, 5), MeshError);
  CHECK_THROWS_AS(check_edge_manifold(std::vector<Face>{{0, 0, 1}}, 2), MeshError);
  CHECK_THROWS_AS(check_edge_manifold(std::vector<Face>{{0, 1, 5}}, 3), MeshError);
}

TEST_CASE("uniform laplacian oracle and transpose") {
  const std::vector<Face> faces{{0, 1, 2}, {0, 2, 3}};
  const std::vector<Vec3> v{{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 4}};
  const VertexAdjacency adj = build_adjacency(faces, 4);
  const auto lap = uniform_laplacian(adj, v);
  // Vertex 0 neighbours 1, 2, 3: mean (4/3, 4/3, 4/3).
  check_near(lap[0], {4.0f / 3, 4.0f / 3, 4.0f / 3}, 1e-6);
  // Vertex 1 neighbours 0, 2: mean (1, 1, 0) - (2, 0, 0).
  check_near(lap[1], {-1, 1, 0}, 1e-6);

  std::mt19937_64 rng(2);
  std::normal_distribution<float> n;
  const TriMesh s = make_icosphere(1);
  const VertexAdjacency a2 = build_adjacency(s.faces, s.vertices.size());
  std::vector<Vec3> x(s.vertices.size()), y(s.vertices.size());
  for (auto& p : x) p = {n(rng), n(rng), n(rng)};
  for (auto& p : y) p = {n(rng), n(rng), n(rng)};
  const auto lx = uniform_laplacian(a2, x);
  const auto lty = uniform_laplacian_transpose(a2, y);
  double lhs = 0, rhs = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    lhs += dot(lx[i], y[i]);
    rhs += dot(x[i], lty[i]);
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("subdivision counts and midpoints") {
  const TriMesh ico = make_icosahedron();
  const Subdivision sub = subdivide4_topology(ico.faces, 12);
  CHECK(sub.faces.size() == 80);
  CHECK(sub.edge_parents.size() == 30);
  std::vector<float> attr{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110};
  interpolate_midpoints(attr, 1, sub);
  REQUIRE(attr.size() == 42);
  for (size_t e = 0; e < sub.edge_parents.size(); ++e) {
    const auto [a, b] = sub.edge_parents[e];
    CHECK(attr[12 + e] == doctest::Approx(5.0 * (a + b)));
  }
}

TEST_CASE("template enlargement inflates for negative strength") {
  const TriMesh s = make_icosphere(2, 0.1f);
  // Perturb so the Laplacian is not purely radial-symmetric.
  std::vector<Vec3> v = s.vertices;
  for (size_t i = 0; i < v.size(); ++i) v[i].y *= 1.2f;
  auto mean_radius = [](const std::vector<Vec3>& pts) {
    double r = 0;
    for (const Vec3& p : pts) r += norm(p);
    return r / pts.size();
  };
  const auto grow = enlarge_template(v, s.faces, -0.5f, 3);
  const auto shrink = enlarge_template(v, s.faces, 0.5f, 3);
  std::vector<Vec3> big = v, small = v;
  for (size_t i = 0; i < v.size(); ++i) {
    big[i] += grow[i];
    small[i] += shrink[i];
  }
  CHECK(mean_radius(big) > mean_radius(v));
  CHECK(mean_radius(small) < mean_radius(v));
  CHECK_FALSE(mesh_self_intersects(big, s.faces));
  const auto none = enlarge_template(v, s.faces, -0.5f, 0);
  for (const Vec3& o : none) CHECK(o == Vec3{});
}

TEST_CASE("triangle intersection oracle") {
  const std::array<Vec3, 3> a{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
  const std::array<Vec3, 3> pierce{Vec3{0.2f, 0.2f, -1}, Vec3{0.2f, 0.2f, 1}, Vec3{0.3f, 0.25f, 1}};
  const std::array<Vec3, 3> apart{Vec3{2, 2, -1}, Vec3{2, 2, 1}, Vec3{3, 2, 1}};
  CHECK(triangles_intersect(a, pierce));
  CHECK_FALSE(triangles_intersect(a, apart));
}

TEST_CASE("axis-angle rotation") {
  const Mat3 r = rotation_from_axis_angle({0, 0, static_cast<float>(M_PI / 2)});
  check_near(r * Vec3{1, 0, 0}, {0, 1, 0}, 1e-6);
  const Mat3 q = rotation_from_axis_angle({0.3f, -0.7f, 0.2f});
  const Mat3 qq = transpose(q) * q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(qq(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));
  CHECK(rotation_from_axis_angle({}) == Mat3::identity());
}

TEST_CASE("lbs matches rotations about the joints") {
  const HeadModel m = tiny_model();
  const Vec3 root_aa{0.0f, 0.4f, 0.0f}, child_aa{0.0f, 0.0f, 0.6f};
  const std::vector<Vec3> phi{root_aa, child_aa};
  const auto posed = lbs(m, m.template_vertices, phi);
  const Mat3 r0 = rotation_from_axis_angle(root_aa), r1 = rotation_from_axis_angle(child_aa);
  // Root-driven vertices rotate about the origin.
  check_near(posed[0], r0 * m.template_vertices[0], 1e-6);
  check_near(posed[1], r0 * m.template_vertices[1], 1e-6);
  // Child-driven vertices rotate about the child joint, then follow the root.
  for (int i : {2, 3}) {
    const Vec3 local = rotate_about(r1, m.joint_positions[1], m.template_vertices[i]);
    check_near(posed[i], r0 * local, 1e-5);
  }
}

TEST_CASE("zero rotations make lbs the identity") {
  const HeadModel m = make_desk_model();
  const std::vector<Vec3> phi(m.num_joints());
  CHECK(lbs(m, m.template_vertices, phi) == m.template_vertices);
  // The general path also stays within 1e-6 for a rotation of 0 + tiny.
  std::vector<Vec3> tiny(m.num_joints());
  tiny[0] = {1e-12f, 0.0f, 0.0f};
  const auto almost = lbs(m, m.template_vertices, tiny);
  for (size_t i = 0; i < almost.size(); ++i) check_near(almost[i], m.template_vertices[i], 1e-6);
}

TEST_CASE("blendshape adds linear shape, expression and pose terms") {
  HeadModel m = tiny_model();
  m.shape_basis[(2 * 3 + 1) * 1 + 0] = 0.5f;       // vertex 2, y
  m.expression_basis[(0 * 3 + 2) * 1 + 0] = -2.0f;  // vertex 0, z
  // Pose corrective on vertex 3, x, for the (0, 1) entry of R - I of joint 1.
  m.pose_basis[(3 * 3 + 0) * 9 + 1] = 3.0f;
  const std::vector<float> beta{0.4f}, psi{0.25f};
  const Vec3 aa{0.0f, 0.0f, 0.3f};
  const std::vector<Vec3> phi{{}, aa};
  const auto b = blendshape(m, beta, psi, phi);
  const Mat3 r = rotation_from_axis_angle(aa);
  check_near(b[2] - m.template_vertices[2], {0, 0.2f, 0}, 1e-6);
  check_near(b[0] - m.template_vertices[0], {0, 0, -0.5f}, 1e-6);
  check_near(b[3] - m.template_vertices[3], {3.0f * r(0, 1), 0, 0}, 1e-6);
  check_near(b[1], m.template_vertices[1], 0.0);
}

TEST_CASE("articulation identity reproduces the enlarged template bit-exactly") {
  const HeadModel m = make_desk_model();
  std::mt19937_64 rng(11);
  AvatarInit init;
  init.texture_size = 8;
  init.enlarge_iterations = 3;
  const AvatarState s = initialize_avatar(m, init, rng);
  const PoseEvaluation e = posed_vertices(m, s, ArticulationPose::neutral(m));
  for (size_t i = 0; i < m.num_vertices(); ++i) {
    CHECK(e.posed[i] == m.template_vertices[i] + s.base_offsets[i]);
  }
  for (float o : e.mlp_offsets.values()) CHECK(o == 0.0f);
}

TEST_CASE("feature initialisation has the configured spread") {
  const HeadModel m = make_desk_model();
  std::mt19937_64 rng(5);
  AvatarInit init;
  init.texture_size = 4;
  const AvatarState s = initialize_avatar(m, init, rng);
  CHECK(s.features.shape() == Shape{static_cast<int64_t>(m.num_vertices()), kFeatureDim});
  double sum = 0, sq = 0;
  for (float c : s.features.values()) {
    sum += c;
    sq += double(c) * c;
  }
  const double n = static_cast<double>(s.features.size());
  const double mean = sum / n, var = sq / n - mean * mean;
  // 5184 draws: the sample variance is within ~2% of sigma^2 at one s.d.
  CHECK(std::abs(mean) < 3 * init.feature_sigma / std::sqrt(n));
  CHECK(std::sqrt(var) == doctest::Approx(init.feature_sigma).epsilon(0.05));
  for (float t : s.texture.values()) CHECK(t == 0.0f);
  for (float b : s.beta) CHECK(b == 0.0f);
}

TEST_CASE("desk model is a valid articulated head") {
  const HeadModel m = make_desk_model();
  CHECK_NOTHROW(m.validate());
  CHECK(m.num_vertices() == 162);
  CHECK(m.num_shape == 4);
  CHECK(m.num_expression == 4);
  std::array<int, 4> seen{};
  for (Region r : m.regions) seen[static_cast<int>(r)]++;
  for (int c : seen) CHECK(c > 0);
  const HeadModel s = subdivide4(m);
  CHECK(s.num_vertices() == 642);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("model file round trip and face edits") {
  const HeadModel m = make_desk_model();
  const auto dir = std::filesystem::temp_directory_path() / "dualhead_test_model";
  std::filesystem::create_directories(dir);
  save_model(dir / "m.hdm", m);
  const HeadModel back = load_model(dir / "m.hdm");
  CHECK(back.template_vertices == m.template_vertices);
  CHECK(back.faces == m.faces);
  CHECK(back.skinning_weights == m.skinning_weights);
  CHECK(back.regions == m.regions);

  ChunkArchive a = model_to_archive(m);
  std::vector<uint8_t> keep(m.faces.size(), 1);
  keep[0] = 0;
  a.put_u8("face_keep_mask", {static_cast<int64_t>(keep.size())}, keep);
  const HeadModel edited = model_from_archive(a);
  CHECK(edited.faces.size() == m.faces.size() - 1);

  ChunkArchive broken = model_to_archive(m);
  broken.put_f32("uv_coords", {1, 2}, std::vector<float>{0.0f, 0.0f});
  CHECK_THROWS(model_from_archive(broken));
  CHECK_THROWS_AS(load_model(dir / "missing.hdm"), IoError);
  std::filesystem::remove_all(dir);
}
