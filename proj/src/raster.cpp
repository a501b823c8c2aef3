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

#include "dualhead/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualhead/errors.hpp"
#include "dualhead/resize.hpp"

namespace dualhead {

void RasterSettings::validate() const {
  if (width < 1 || height < 1) throw ConfigError("raster resolution must be positive");
  if (mode == RasterMode::kSoft) {
    if (!(sigma > 0.0f) || !(gamma > 0.0f) || faces_per_pixel < 1) {
      throw ConfigError("soft rasterization requires sigma > 0, gamma > 0, faces_per_pixel >= 1");
    }
    if (!(min_influence > 0.0 && min_influence < 0.5)) {
      throw ConfigError("min_influence must be in (0, 0.5)");
    }
  }
}

size_t Mask::count() const {
  return static_cast<size_t>(std::count(data.begin(), data.end(), uint8_t{1}));
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) throw DimensionError("mask_iou: size mismatch");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    inter += (a.data[i] && b.data[i]) ? 1 : 0;
    uni += (a.data[i] || b.data[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Mask Fragments::coverage() const {
  Mask m(width, height);
  for (size_t i = 0; i < face.size(); ++i) m.data[i] = face[i] >= 0 ? 1 : 0;
  return m;
}

namespace {

double edge_fn(const ProjectedVertex& a, const ProjectedVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

bool clipped(const ProjectedVertex& p, double near, double far) {
  return !(std::isfinite(p.x) && std::isfinite(p.y) && p.depth > near && p.depth < far);
}

struct PixelRange {
  int x0, x1, y0, y1;
  bool empty() const { return x0 > x1 || y0 > y1; }
};

// Pixel centres whose NDC lies within [xmin - pad, xmax + pad] etc., widened
// by one pixel so the exact per-pixel test decides membership.
PixelRange pixel_range(double xmin, double xmax, double ymin, double ymax, double pad, int w,
                       int h) {
  auto to_col = [w](double x) { return (x + 1.0) * w / 2.0 - 0.5; };
  auto to_row = [h](double y) { return (1.0 - y) * h / 2.0 - 0.5; };
  PixelRange r;
  r.x0 = std::max(0, static_cast<int>(std::floor(to_col(xmin - pad))) - 1);
  r.x1 = std::min(w - 1, static_cast<int>(std::ceil(to_col(xmax + pad))) + 1);
  r.y0 = std::max(0, static_cast<int>(std::floor(to_row(ymax + pad))) - 1);
  r.y1 = std::min(h - 1, static_cast<int>(std::ceil(to_row(ymin - pad))) + 1);
  return r;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<ProjectedVertex> project_all(const CameraFrame& frame, std::span<const Vec3> vertices) {
  std::vector<ProjectedVertex> out(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) out[i] = frame.project(vertices[i]);
  return out;
}

}  // namespace

Fragments rasterize_hard_ndc(std::span<const ProjectedVertex> projected,
                             std::span<const Face> faces, int width, int height, double near,
                             double far) {
  Fragments fr;
  fr.width = width;
  fr.height = height;
  const size_t n = static_cast<size_t>(width) * height;
  fr.face.assign(n, -1);
  fr.bary.assign(n, {0.0f, 0.0f, 0.0f});
  fr.depth.assign(n, std::numeric_limits<float>::infinity());
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());

  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const ProjectedVertex& p0 = projected[f[0]];
    const ProjectedVertex& p1 = projected[f[1]];
    const ProjectedVertex& p2 = projected[f[2]];
    if (clipped(p0, near, far) || clipped(p1, near, far) || clipped(p2, near, far)) {
      ++fr.diagnostics.clipped_faces;
      continue;
    }
    const double area = edge_fn(p0, p1, p2.x, p2.y);
    if (!(std::abs(area) > 1e-14)) {
      ++fr.diagnostics.degenerate_faces;
      continue;
    }
    const auto r = pixel_range(std::min({p0.x, p1.x, p2.x}), std::max({p0.x, p1.x, p2.x}),
                               std::min({p0.y, p1.y, p2.y}), std::max({p0.y, p1.y, p2.y}), 0.0,
                               width, height);
    if (r.empty()) continue;
    for (int y = r.y0; y <= r.y1; ++y) {
      const double py = pixel_center_ndc_y(y, height);
      for (int x = r.x0; x <= r.x1; ++x) {
        const double px = pixel_center_ndc_x(x, width);
        const double w0 = edge_fn(p1, p2, px, py);
        const double w1 = edge_fn(p2, p0, px, py);
        const double w2 = edge_fn(p0, p1, px, py);
        const bool inside = area > 0.0 ? (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                                       : (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
        if (!inside) continue;
        const double q0 = (w0 / area) / p0.depth;
        const double q1 = (w1 / area) / p1.depth;
        const double q2 = (w2 / area) / p2.depth;
        const double s = q0 + q1 + q2;
        const double z = 1.0 / s;
        const size_t pix = static_cast<size_t>(y) * width + x;
        if (z < zbuf[pix]) {
          zbuf[pix] = z;
          fr.face[pix] = static_cast<int32_t>(fi);
          fr.depth[pix] = static_cast<float>(z);
          fr.bary[pix] = {static_cast<float>(q0 / s), static_cast<float>(q1 / s),
                          static_cast<float>(q2 / s)};
        }
      }
    }
  }
  return fr;
}

Fragments rasterize_hard(std::span<const Vec3> vertices, std::span<const Face> faces,
                         const Camera& camera, int width, int height) {
  if (width < 1 || height < 1) throw ConfigError("raster resolution must be positive");
  const CameraFrame frame = make_camera_frame(camera);
  const auto projected = project_all(frame, vertices);
  return rasterize_hard_ndc(projected, faces, width, height, frame.near, frame.far);
}

RenderOutput render_features(std::span<const Vec3> vertices, std::span<const Face> faces,
                             std::span<const std::array<float, 2>> uv, const Tensor& texture,
                             const Camera& camera, const RasterSettings& settings,
                             std::span<const float> background) {
  settings.validate();
  if (texture.rank() != 3) throw DimensionError("texture must be [C, H, W]");
  if (uv.size() != vertices.size()) throw DimensionError("uv count must match vertex count");
  const int c_n = static_cast<int>(texture.dim(0));
  const int th = static_cast<int>(texture.dim(1));
  const int tw = static_cast<int>(texture.dim(2));
  if (!background.empty() && static_cast<int>(background.size()) != c_n) {
    throw DimensionError("background channel count must match texture channels");
  }
  const int w = settings.width, h = settings.height;

  RenderOutput out;
  out.texture_shape = texture.shape();
  out.fragments = rasterize_hard(vertices, faces, camera, w, h);
  out.hard_mask = out.fragments.coverage();
  out.features = Tensor({c_n, h, w});
  const size_t plane = static_cast<size_t>(th) * tw;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t pix = static_cast<size_t>(y) * w + x;
      const int32_t fi = out.fragments.face[pix];
      if (fi < 0) {
        for (int c = 0; c < c_n; ++c) out.features.at(c, y, x) = background.empty() ? 0.0f : background[c];
        continue;
      }
      const Face& f = faces[fi];
      const auto& b = out.fragments.bary[pix];
      const float u = b[0] * uv[f[0]][0] + b[1] * uv[f[1]][0] + b[2] * uv[f[2]][0];
      const float v = b[0] * uv[f[0]][1] + b[1] * uv[f[1]][1] + b[2] * uv[f[2]][1];
      const double sx = std::clamp(static_cast<double>(u) * tw - 0.5, 0.0, tw - 1.0);
      const double sy = std::clamp((1.0 - static_cast<double>(v)) * th - 0.5, 0.0, th - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, tw - 1);
      const int y1 = std::min(y0 + 1, th - 1);
      const float fx = static_cast<float>(sx - x0);
      const float fy = static_cast<float>(sy - y0);
      const std::array<int32_t, 4> idx{y0 * tw + x0, y0 * tw + x1, y1 * tw + x0, y1 * tw + x1};
      const std::array<float, 4> wt{(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      for (int c = 0; c < c_n; ++c) {
        const float* tex = texture.data() + c * plane;
        out.features.at(c, y, x) =
            wt[0] * tex[idx[0]] + wt[1] * tex[idx[1]] + wt[2] * tex[idx[2]] + wt[3] * tex[idx[3]];
      }
      out.taps.pixel.push_back(static_cast<int32_t>(pix));
      out.taps.texel.push_back(idx);
      out.taps.weight.push_back(wt);
    }
  }
  return out;
}

void accumulate_texture_gradient(const RenderOutput& out, const Tensor& feature_adjoint,
                                 Tensor& texture_grad) {
  feature_adjoint.expect_shape(out.features.shape(), "feature adjoint");
  texture_grad.expect_shape(out.texture_shape, "texture gradient");
  const int c_n = static_cast<int>(out.texture_shape[0]);
  const size_t plane = static_cast<size_t>(out.texture_shape[1]) * out.texture_shape[2];
  const size_t img = static_cast<size_t>(out.features.dim(1)) * out.features.dim(2);
  for (size_t k = 0; k < out.taps.pixel.size(); ++k) {
    const size_t pix = static_cast<size_t>(out.taps.pixel[k]);
    const auto& idx = out.taps.texel[k];
    const auto& wt = out.taps.weight[k];
    for (int c = 0; c < c_n; ++c) {
      const float g = feature_adjoint[c * img + pix];
      if (g == 0.0f) continue;
      float* tg = texture_grad.data() + c * plane;
      for (int j = 0; j < 4; ++j) tg[idx[j]] += wt[j] * g;
    }
  }
}

Tensor render_features_backward(const RenderOutput& out, const Tensor& feature_adjoint) {
  Tensor grad(out.texture_shape);
  accumulate_texture_gradient(out, feature_adjoint, grad);
  return grad;
}

SoftMaskOutput render_soft_mask(std::span<const Vec3> vertices, std::span<const Face> faces,
                                const Camera& camera, const RasterSettings& settings) {
  RasterSettings s = settings;
  s.mode = RasterMode::kSoft;
  s.validate();
  const int w = s.width, h = s.height;
  SoftMaskOutput out;
  out.width = w;
  out.height = h;
  out.sigma = s.sigma;
  out.frame = make_camera_frame(camera);
  out.projected = project_all(out.frame, vertices);
  out.faces.assign(faces.begin(), faces.end());
  out.vertices.assign(vertices.begin(), vertices.end());

  const double sigma = s.sigma;
  const double cutoff_d2 = sigma * std::log(1.0 / s.min_influence - 1.0);
  const double pad = std::sqrt(cutoff_d2);

  struct Candidate {
    double depth;
    SoftFragment frag;
  };
  std::vector<std::vector<Candidate>> lists(static_cast<size_t>(w) * h);

  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const ProjectedVertex* p[3] = {&out.projected[f[0]], &out.projected[f[1]],
                                   &out.projected[f[2]]};
    if (clipped(*p[0], out.frame.near, out.frame.far) ||
        clipped(*p[1], out.frame.near, out.frame.far) ||
        clipped(*p[2], out.frame.near, out.frame.far)) {
      ++out.diagnostics.clipped_faces;
      continue;
    }
    const double area = edge_fn(*p[0], *p[1], p[2]->x, p[2]->y);
    if (!(std::abs(area) > 1e-14)) {
      ++out.diagnostics.degenerate_faces;
      continue;
    }
    const double depth = (p[0]->depth + p[1]->depth + p[2]->depth) / 3.0;
    const auto r = pixel_range(std::min({p[0]->x, p[1]->x, p[2]->x}),
                               std::max({p[0]->x, p[1]->x, p[2]->x}),
                               std::min({p[0]->y, p[1]->y, p[2]->y}),
                               std::max({p[0]->y, p[1]->y, p[2]->y}), pad, w, h);
    if (r.empty()) continue;
    for (int y = r.y0; y <= r.y1; ++y) {
      const double py = pixel_center_ndc_y(y, h);
      for (int x = r.x0; x <= r.x1; ++x) {
        const double px = pixel_center_ndc_x(x, w);
        const double w0 = edge_fn(*p[1], *p[2], px, py);
        const double w1 = edge_fn(*p[2], *p[0], px, py);
        const double w2 = edge_fn(*p[0], *p[1], px, py);
        const bool inside = area > 0.0 ? (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                                       : (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
        double best = std::numeric_limits<double>::infinity();
        int best_edge = 0;
        double best_t = 0.0;
        for (int k = 0; k < 3; ++k) {
          const ProjectedVertex& a = *p[k];
          const ProjectedVertex& b = *p[(k + 1) % 3];
          const double ex = b.x - a.x, ey = b.y - a.y;
          const double len2 = ex * ex + ey * ey;
          double t = len2 > 0.0 ? ((px - a.x) * ex + (py - a.y) * ey) / len2 : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          const double dx = px - (a.x + t * ex), dy = py - (a.y + t * ey);
          const double d2 = dx * dx + dy * dy;
          if (d2 < best) {
            best = d2;
            best_edge = k;
            best_t = t;
          }
        }
        if (!inside && best > cutoff_d2) continue;
        const int8_t sign = inside ? 1 : -1;
        const double infl = sigmoid(sign * best / sigma);
        lists[static_cast<size_t>(y) * w + x].push_back(
            {depth, {static_cast<int32_t>(fi), static_cast<uint8_t>(best_edge), sign,
                     static_cast<float>(best_t), infl}});
      }
    }
  }

  out.mask = Tensor({h, w});
  out.offsets.reserve(lists.size() + 1);
  out.offsets.push_back(0);
  const size_t k_max = static_cast<size_t>(s.faces_per_pixel);
  for (size_t pix = 0; pix < lists.size(); ++pix) {
    auto& l = lists[pix];
    std::sort(l.begin(), l.end(), [](const Candidate& a, const Candidate& b) {
      return a.depth != b.depth ? a.depth < b.depth : a.frag.face < b.frag.face;
    });
    if (l.size() > k_max) l.resize(k_max);
    double keep_out = 1.0;
    for (const auto& c : l) {
      keep_out *= 1.0 - c.frag.influence;
      out.fragments.push_back(c.frag);
    }
    out.mask[pix] = static_cast<float>(1.0 - keep_out);
    out.offsets.push_back(static_cast<int32_t>(out.fragments.size()));
  }
  return out;
}

std::vector<Vec3> render_soft_mask_backward(const SoftMaskOutput& out, const Tensor& mask_adjoint) {
  mask_adjoint.expect_shape(out.mask.shape(), "soft mask adjoint");
  std::vector<std::array<double, 2>> ndc_grad(out.projected.size(), {0.0, 0.0});
  std::vector<double> prefix, suffix;
  for (int y = 0; y < out.height; ++y) {
    const double py = pixel_center_ndc_y(y, out.height);
    for (int x = 0; x < out.width; ++x) {
      const size_t pix = static_cast<size_t>(y) * out.width + x;
      const double g = mask_adjoint[pix];
      if (g == 0.0) continue;
      const double px = pixel_center_ndc_x(x, out.width);
      const int32_t begin = out.offsets[pix], end = out.offsets[pix + 1];
      const size_t n = static_cast<size_t>(end - begin);
      if (n == 0) continue;
      prefix.assign(n + 1, 1.0);
      suffix.assign(n + 1, 1.0);
      for (size_t k = 0; k < n; ++k) {
        prefix[k + 1] = prefix[k] * (1.0 - out.fragments[begin + k].influence);
      }
      for (size_t k = n; k-- > 0;) {
        suffix[k] = suffix[k + 1] * (1.0 - out.fragments[begin + k].influence);
      }
      for (size_t k = 0; k < n; ++k) {
        const SoftFragment& fr = out.fragments[begin + k];
        const double d_infl = g * prefix[k] * suffix[k + 1];
        const double dd2 = d_infl * fr.influence * (1.0 - fr.influence) * fr.sign / out.sigma;
        if (dd2 == 0.0) continue;
        const Face& f = out.faces[fr.face];
        const int ia = f[fr.edge], ib = f[(fr.edge + 1) % 3];
        const ProjectedVertex& a = out.projected[ia];
        const ProjectedVertex& b = out.projected[ib];
        const double t = fr.t;
        const double dx = px - (a.x + t * (b.x - a.x));
        const double dy = py - (a.y + t * (b.y - a.y));
        ndc_grad[ia][0] += -2.0 * (1.0 - t) * dx * dd2;
        ndc_grad[ia][1] += -2.0 * (1.0 - t) * dy * dd2;
        ndc_grad[ib][0] += -2.0 * t * dx * dd2;
        ndc_grad[ib][1] += -2.0 * t * dy * dd2;
      }
    }
  }
  std::vector<Vec3> grad(out.vertices.size());
  for (size_t i = 0; i < out.vertices.size(); ++i) {
    if (ndc_grad[i][0] == 0.0 && ndc_grad[i][1] == 0.0) continue;
    const auto j = out.frame.project_jacobian(out.vertices[i]);
    for (int k = 0; k < 3; ++k) {
      grad[i][k] = static_cast<float>(ndc_grad[i][0] * j[0][k] + ndc_grad[i][1] * j[1][k]);
    }
  }
  return grad;
}

Tensor render_shaded(std::span<const Vec3> vertices, std::span<const Face> faces,
                     const Camera& camera, int width, int height, const Vec3& light_dir) {
  const Fragments fr = rasterize_hard(vertices, faces, camera, width, height);
  const Vec3 l = normalized(light_dir);
  const Vec3 eye = make_camera_frame(camera).eye_position();
  std::vector<float> face_value(faces.size(), 0.0f);
  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const Vec3 n = normalized(cross(vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]));
    const Vec3 centroid = (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) * (1.0f / 3.0f);
    if (dot(n, eye - centroid) < 0.0f) continue;
    face_value[fi] = std::max(0.0f, dot(n, l));
  }
  Tensor out({3, height, width});
  const size_t plane = static_cast<size_t>(width) * height;
  for (size_t pix = 0; pix < plane; ++pix) {
    const int32_t fi = fr.face[pix];
    if (fi < 0) continue;
    for (int c = 0; c < 3; ++c) out[c * plane + pix] = face_value[fi];
  }
  return out;
}

BackgroundSpec sample_background(std::mt19937_64& rng, int channels, float lo, float hi) {
  std::uniform_real_distribution<float> color(lo, hi);
  std::bernoulli_distribution checker(0.5);
  std::uniform_int_distribution<int> box(15, 25);
  BackgroundSpec bg;
  bg.kind = checker(rng) ? BackgroundSpec::Kind::kCheckerboard : BackgroundSpec::Kind::kUniform;
  for (int c = 0; c < channels; ++c) bg.color_a.push_back(color(rng));
  for (int c = 0; c < channels; ++c) bg.color_b.push_back(color(rng));
  bg.box_size = box(rng);
  return bg;
}

void composite_background(Tensor& image, const Mask& hard_mask, const BackgroundSpec& bg,
                          int reference_resolution) {
  if (image.rank() != 3) throw DimensionError("composite_background: image must be [C,H,W]");
  const int c_n = static_cast<int>(image.dim(0));
  const int h = static_cast<int>(image.dim(1));
  const int w = static_cast<int>(image.dim(2));
  if (hard_mask.width != w || hard_mask.height != h) {
    throw DimensionError("composite_background: mask size does not match image");
  }
  if (static_cast<int>(bg.color_a.size()) != c_n ||
      (bg.kind == BackgroundSpec::Kind::kCheckerboard && static_cast<int>(bg.color_b.size()) != c_n)) {
    throw DimensionError("composite_background: background colour channel mismatch");
  }
  const double box = std::max(1e-9, static_cast<double>(bg.box_size) * w / reference_resolution);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (hard_mask.at(x, y)) continue;
      const bool second = bg.kind == BackgroundSpec::Kind::kCheckerboard &&
                          ((static_cast<int64_t>(std::floor(x / box)) +
                            static_cast<int64_t>(std::floor(y / box))) % 2 == 1);
      const auto& col = second ? bg.color_b : bg.color_a;
      for (int c = 0; c < c_n; ++c) image.at(c, y, x) = col[c];
    }
  }
}

HiLoOutput render_hi_lo(std::span<const Vec3> vertices, std::span<const Face> faces,
                        std::span<const std::array<float, 2>> uv, const Tensor& texture,
                        const Camera& camera, int hi_res, int lo_res,
                        const BackgroundSpec* background) {
  RasterSettings rs;
  rs.mode = RasterMode::kHard;
  rs.width = hi_res;
  rs.height = hi_res;
  HiLoOutput out;
  out.hi = render_features(vertices, faces, uv, texture, camera, rs);
  if (background) composite_background(out.hi.features, out.hi.hard_mask, *background);
  out.features = bilinear_resize(out.hi.features, lo_res, lo_res);
  return out;
}

void accumulate_hi_lo_texture_gradient(const HiLoOutput& out, const Tensor& lo_adjoint,
                                       Tensor& texture_grad) {
  lo_adjoint.expect_shape(out.features.shape(), "hi-lo adjoint");
  const Tensor hi_adj = bilinear_resize_backward(out.hi.features.shape(), lo_adjoint);
  accumulate_texture_gradient(out.hi, hi_adj, texture_grad);
}

}  // namespace dualhead
