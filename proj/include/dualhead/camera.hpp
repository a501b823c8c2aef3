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

#include "dualhead/geometry.hpp"

namespace dualhead {

struct CameraPose {
  float azimuth_deg = 0.0f;
  float elevation_deg = 0.0f;
  float radius = 0.7f;
};

// Perspective look-at-origin camera in a right-handed, y-up world. Azimuth 0
// and elevation 0 put the eye on +z looking down -z; positive azimuth swings
// the eye toward +x, positive elevation lifts it toward +y.
struct Camera {
  CameraPose pose;
  float fov_deg = 25.0f;
  float near = 0.01f;
  float far = 10.0f;
};

struct ProjectedVertex {
  double x = 0.0;      // NDC, +x right
  double y = 0.0;      // NDC, +y up
  double depth = 0.0;  // distance along the view direction
};

using Vec3d = std::array<double, 3>;

struct CameraFrame {
  Vec3d eye{};
  Vec3d right{};
  Vec3d up{};
  Vec3d forward{};
  double focal = 1.0;  // 1 / tan(fov / 2)
  double near = 0.01;
  double far = 10.0;

  ProjectedVertex project(const Vec3& p) const;
  // d(ndc_x, ndc_y) / d(world position), rows x then y.
  std::array<Vec3d, 2> project_jacobian(const Vec3& p) const;
  Vec3 eye_position() const {
    return {static_cast<float>(eye[0]), static_cast<float>(eye[1]), static_cast<float>(eye[2])};
  }
};

// Throws ConfigError for radius <= 0 or a non-positive field of view.
CameraFrame make_camera_frame(const Camera& camera);

// NDC coordinate of pixel centre (index + 0.5); row 0 is the top of the image.
inline double pixel_center_ndc_x(int x, int width) { return 2.0 * (x + 0.5) / width - 1.0; }
inline double pixel_center_ndc_y(int y, int height) { return 1.0 - 2.0 * (y + 0.5) / height; }

}  // namespace dualhead
