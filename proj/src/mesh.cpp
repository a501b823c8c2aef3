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

#include "dualhead/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

std::pair<int32_t, int32_t> edge_key(int32_t a, int32_t b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

VertexAdjacency build_adjacency(std::span<const Face> faces, size_t num_vertices) {
  std::vector<std::vector<int32_t>> rows(num_vertices);
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const int32_t a = f[k], b = f[(k + 1) % 3];
      rows[a].push_back(b);
      rows[b].push_back(a);
    }
  }
  VertexAdjacency adj;
  adj.offsets.reserve(num_vertices + 1);
  adj.offsets.push_back(0);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    adj.neighbors.insert(adj.neighbors.end(), r.begin(), r.end());
    adj.offsets.push_back(static_cast<int32_t>(adj.neighbors.size()));
  }
  return adj;
}

std::vector<std::pair<int32_t, int32_t>> unique_edges(std::span<const Face> faces) {
  std::vector<std::pair<int32_t, int32_t>> edges;
  edges.reserve(faces.size() * 3);
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) edges.push_back(edge_key(f[k], f[(k + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

void check_edge_manifold(std::span<const Face> faces, size_t num_vertices) {
  std::map<std::pair<int32_t, int32_t>, int> uses;
  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || static_cast<size_t>(f[k]) >= num_vertices) {
        throw MeshError("face " + std::to_string(fi) + " references vertex " +
                        std::to_string(f[k]) + " out of range");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw MeshError("face " + std::to_string(fi) + " repeats a vertex");
    }
    for (int k = 0; k < 3; ++k) {
      if (++uses[edge_key(f[k], f[(k + 1) % 3])] > 2) {
        throw MeshError("non-manifold edge (" + std::to_string(f[k]) + "," +
                        std::to_string(f[(k + 1) % 3]) + ")");
      }
    }
  }
}

std::vector<Vec3> uniform_laplacian(const VertexAdjacency& adj, std::span<const Vec3> vertices) {
  std::vector<Vec3> out(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    const auto nb = adj.of(i);
    if (nb.empty()) continue;
    Vec3 sum;
    for (int32_t j : nb) sum += vertices[j];
    out[i] = sum * (1.0f / static_cast<float>(nb.size())) - vertices[i];
  }
  return out;
}

std::vector<Vec3> uniform_laplacian_transpose(const VertexAdjacency& adj,
                                              std::span<const Vec3> adjoint) {
  std::vector<Vec3> out(adjoint.size());
  for (size_t i = 0; i < adjoint.size(); ++i) {
    const auto nb = adj.of(i);
    if (nb.empty()) continue;
    const Vec3 share = adjoint[i] * (1.0f / static_cast<float>(nb.size()));
    for (int32_t j : nb) out[j] += share;
    out[i] -= adjoint[i];
  }
  return out;
}

Subdivision subdivide4_topology(std::span<const Face> faces, size_t num_vertices) {
  check_edge_manifold(faces, num_vertices);
  Subdivision sub;
  std::map<std::pair<int32_t, int32_t>, int32_t> midpoint;
  auto mid = [&](int32_t a, int32_t b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const auto id = static_cast<int32_t>(num_vertices + sub.edge_parents.size());
    sub.edge_parents.push_back(key);
    midpoint.emplace(key, id);
    return id;
  };
  sub.faces.reserve(faces.size() * 4);
  for (const Face& f : faces) {
    const int32_t m01 = mid(f[0], f[1]);
    const int32_t m12 = mid(f[1], f[2]);
    const int32_t m20 = mid(f[2], f[0]);
    sub.faces.push_back({f[0], m01, m20});
    sub.faces.push_back({m01, f[1], m12});
    sub.faces.push_back({m20, m12, f[2]});
    sub.faces.push_back({m01, m12, m20});
  }
  return sub;
}

void interpolate_midpoints(std::vector<float>& attribute, size_t stride,
                           const Subdivision& subdivision) {
  const size_t base = attribute.size();
  attribute.resize(base + subdivision.edge_parents.size() * stride);
  for (size_t e = 0; e < subdivision.edge_parents.size(); ++e) {
    const auto [a, b] = subdivision.edge_parents[e];
    for (size_t k = 0; k < stride; ++k) {
      attribute[base + e * stride + k] =
          0.5f * (attribute[static_cast<size_t>(a) * stride + k] +
                  attribute[static_cast<size_t>(b) * stride + k]);
    }
  }
}

TriMesh make_icosahedron(float radius) {
  const float t = (1.0f + std::sqrt(5.0f)) / 2.0f;
  TriMesh mesh;
  mesh.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                   {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : mesh.vertices) v = normalized(v) * radius;
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return mesh;
}

TriMesh make_icosphere(int levels, float radius) {
  TriMesh mesh = make_icosahedron(radius);
  for (int l = 0; l < levels; ++l) {
    const auto sub = subdivide4_topology(mesh.faces, mesh.vertices.size());
    for (const auto& [a, b] : sub.edge_parents) {
      mesh.vertices.push_back(normalized(mesh.vertices[a] + mesh.vertices[b]) * radius);
    }
    mesh.faces = sub.faces;
  }
  return mesh;
}

std::vector<Vec3> vertex_normals(std::span<const Vec3> vertices, std::span<const Face> faces) {
  std::vector<Vec3> normals(vertices.size());
  for (const Face& f : faces) {
    const Vec3 n = cross(vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]);
    for (int k = 0; k < 3; ++k) normals[f[k]] += n;
  }
  for (auto& n : normals) n = normalized(n);
  return normals;
}

float bounding_box_diagonal(std::span<const Vec3> vertices) {
  if (vertices.empty()) return 0.0f;
  Vec3 lo = vertices[0], hi = vertices[0];
  for (const auto& v : vertices) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
    }
  }
  return norm(hi - lo);
}

std::vector<Vec3> enlarge_template(std::span<const Vec3> vertices, std::span<const Face> faces,
                                   float strength, int iterations) {
  const auto adj = build_adjacency(faces, vertices.size());
  std::vector<Vec3> current(vertices.begin(), vertices.end());
  const float limit = 10.0f * bounding_box_diagonal(vertices);
  for (int it = 0; it < iterations; ++it) {
    const auto lap = uniform_laplacian(adj, current);
    for (size_t i = 0; i < current.size(); ++i) current[i] += lap[i] * strength;
    for (size_t i = 0; i < current.size(); ++i) {
      const float d = norm(current[i] - vertices[i]);
      if (!std::isfinite(d) || d > limit) {
        throw NumericError("enlarge_template diverged at iteration " + std::to_string(it));
      }
    }
  }
  std::vector<Vec3> offsets(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) offsets[i] = current[i] - vertices[i];
  return offsets;
}

namespace {

struct D3 {
  double x, y, z;
};
D3 to_d(const Vec3& v) { return {v.x, v.y, v.z}; }
D3 sub(const D3& a, const D3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dotd(const D3& a, const D3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
D3 crossd(const D3& a, const D3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Segment pq against triangle abc (Moller-Trumbore, closed segment).
bool segment_hits_triangle(const D3& p, const D3& q, const D3& a, const D3& b, const D3& c) {
  const D3 dir = sub(q, p);
  const D3 e1 = sub(b, a), e2 = sub(c, a);
  const D3 pv = crossd(dir, e2);
  const double det = dotd(e1, pv);
  if (std::abs(det) < 1e-300) return false;  // parallel or coplanar
  const double inv = 1.0 / det;
  const D3 tv = sub(p, a);
  const double u = dotd(tv, pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const D3 qv = crossd(tv, e1);
  const double v = dotd(dir, qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = dotd(e2, qv) * inv;
  return t >= 0.0 && t <= 1.0;
}

}  // namespace

bool triangles_intersect(const std::array<Vec3, 3>& a, const std::array<Vec3, 3>& b) {
  const D3 A[3] = {to_d(a[0]), to_d(a[1]), to_d(a[2])};
  const D3 B[3] = {to_d(b[0]), to_d(b[1]), to_d(b[2])};
  for (int k = 0; k < 3; ++k) {
    if (segment_hits_triangle(A[k], A[(k + 1) % 3], B[0], B[1], B[2])) return true;
    if (segment_hits_triangle(B[k], B[(k + 1) % 3], A[0], A[1], A[2])) return true;
  }
  return false;
}

bool mesh_self_intersects(std::span<const Vec3> vertices, std::span<const Face> faces) {
  struct Box {
    Vec3 lo, hi;
  };
  std::vector<Box> boxes(faces.size());
  for (size_t i = 0; i < faces.size(); ++i) {
    Box b{vertices[faces[i][0]], vertices[faces[i][0]]};
    for (int k = 1; k < 3; ++k) {
      const Vec3& v = vertices[faces[i][k]];
      for (int c = 0; c < 3; ++c) {
        b.lo[c] = std::min(b.lo[c], v[c]);
        b.hi[c] = std::max(b.hi[c], v[c]);
      }
    }
    boxes[i] = b;
  }
  for (size_t i = 0; i < faces.size(); ++i) {
    for (size_t j = i + 1; j < faces.size(); ++j) {
      bool overlap = true;
      for (int c = 0; c < 3 && overlap; ++c) {
        overlap = boxes[i].lo[c] <= boxes[j].hi[c] && boxes[j].lo[c] <= boxes[i].hi[c];
      }
      if (!overlap) continue;
      bool shares = false;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) shares |= faces[i][p] == faces[j][q];
      if (shares) continue;
      const std::array<Vec3, 3> ta{vertices[faces[i][0]], vertices[faces[i][1]],
                                   vertices[faces[i][2]]};
      const std::array<Vec3, 3> tb{vertices[faces[j][0]], vertices[faces[j][1]],
                                   vertices[faces[j][2]]};
      if (triangles_intersect(ta, tb)) return true;
    }
  }
  return false;
}

}  // namespace dualhead
