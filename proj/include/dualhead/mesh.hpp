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

#include <span>
#include <utility>
#include <vector>

#include "dualhead/geometry.hpp"

namespace dualhead {

// Vertex neighbourhoods of the edge graph in CSR form, each row sorted.
struct VertexAdjacency {
  std::vector<int32_t> offsets;  // size V + 1
  std::vector<int32_t> neighbors;

  size_t num_vertices() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const int32_t> of(size_t v) const {
    return {neighbors.data() + offsets[v], static_cast<size_t>(offsets[v + 1] - offsets[v])};
  }
};

VertexAdjacency build_adjacency(std::span<const Face> faces, size_t num_vertices);

// Sorted unique undirected edges (a < b).
std::vector<std::pair<int32_t, int32_t>> unique_edges(std::span<const Face> faces);

// Throws MeshError if any face index is out of range, any face repeats a
// vertex, or any edge is shared by more than two faces.
void check_edge_manifold(std::span<const Face> faces, size_t num_vertices);

// L(v)_i = (1/|N(i)|) sum_{j in N(i)} v_j - v_i. Isolated vertices map to 0.
std::vector<Vec3> uniform_laplacian(const VertexAdjacency& adj, std::span<const Vec3> vertices);

// Applies L^T, used to pull adjoints back through uniform_laplacian.
std::vector<Vec3> uniform_laplacian_transpose(const VertexAdjacency& adj,
                                              std::span<const Vec3> adjoint);

// Four-way subdivision: one new vertex per edge at index V + edge_id.
struct Subdivision {
  std::vector<Face> faces;
  std::vector<std::pair<int32_t, int32_t>> edge_parents;  // parents of each new vertex
};

Subdivision subdivide4_topology(std::span<const Face> faces, size_t num_vertices);

// Appends midpoint values for a per-vertex attribute with `stride` floats.
void interpolate_midpoints(std::vector<float>& attribute, size_t stride,
                           const Subdivision& subdivision);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
};

TriMesh make_icosahedron(float radius = 1.0f);
// Icosahedron refined `levels` times with vertices projected onto the sphere.
TriMesh make_icosphere(int levels, float radius = 1.0f);

// Area-weighted vertex normals.
std::vector<Vec3> vertex_normals(std::span<const Vec3> vertices, std::span<const Face> faces);

// Offsets produced by iterating v <- v + strength * L(v). Negative strength
// inflates the mesh. Throws NumericError when any vertex drifts farther than
// 10x the initial bounding-box diagonal.
std::vector<Vec3> enlarge_template(std::span<const Vec3> vertices, std::span<const Face> faces,
                                   float strength, int iterations);

float bounding_box_diagonal(std::span<const Vec3> vertices);

// Exact-in-double segment/triangle test for two non-coplanar triangles.
bool triangles_intersect(const std::array<Vec3, 3>& a, const std::array<Vec3, 3>& b);

// True if any two faces without a shared vertex intersect.
bool mesh_self_intersects(std::span<const Vec3> vertices, std::span<const Face> faces);

}  // namespace dualhead
