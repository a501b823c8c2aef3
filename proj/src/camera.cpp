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

#include "dualhead/camera.hpp"

#include <cmath>
#include <numbers>

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

double dot3(const Vec3d& a, const Vec3d& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3d normalize3(const Vec3d& a) {
  const double n = std::sqrt(dot3(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3d cross3(const Vec3d& a, const Vec3d& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

CameraFrame make_camera_frame(const Camera& camera) {
  if (!(camera.pose.radius > 0.0f)) throw ConfigError("camera radius must be positive");
  if (!(camera.fov_deg > 0.0f && camera.fov_deg < 180.0f)) {
    throw ConfigError("camera field of view must be in (0, 180) degrees");
  }
  if (!(camera.near > 0.0f && camera.far > camera.near)) {
    throw ConfigError("camera clip planes must satisfy 0 < near < far");
  }
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double a = camera.pose.azimuth_deg * kDeg;
  const double e = camera.pose.elevation_deg * kDeg;
  const double r = camera.pose.radius;
  CameraFrame f;
  f.eye = {r * std::cos(e) * std::sin(a), r * std::sin(e), r * std::cos(e) * std::cos(a)};
  f.forward = normalize3({-f.eye[0], -f.eye[1], -f.eye[2]});
  Vec3d world_up{0.0, 1.0, 0.0};
  if (std::abs(dot3(f.forward, world_up)) > 1.0 - 1e-9) world_up = {0.0, 0.0, -1.0};
  f.right = normalize3(cross3(f.forward, world_up));
  f.up = cross3(f.right, f.forward);
  f.focal = 1.0 / std::tan(0.5 * camera.fov_deg * kDeg);
  f.near = camera.near;
  f.far = camera.far;
  return f;
}

ProjectedVertex CameraFrame::project(const Vec3& p) const {
  const Vec3d d{p.x - eye[0], p.y - eye[1], p.z - eye[2]};
  const double depth = dot3(forward, d);
  return {focal * dot3(right, d) / depth, focal * dot3(up, d) / depth, depth};
}

std::array<Vec3d, 2> CameraFrame::project_jacobian(const Vec3& p) const {
  const Vec3d d{p.x - eye[0], p.y - eye[1], p.z - eye[2]};
  const double depth = dot3(forward, d);
  const double cx = dot3(right, d);
  const double cy = dot3(up, d);
  std::array<Vec3d, 2> j{};
  for (int k = 0; k < 3; ++k) {
    j[0][k] = focal * (right[k] / depth - cx * forward[k] / (depth * depth));
    j[1][k] = focal * (up[k] / depth - cy * forward[k] / (depth * depth));
  }
  return j;
}

}  // namespace dualhead
