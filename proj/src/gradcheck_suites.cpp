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

#include "dualhead/gradcheck_suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "dualhead/errors.hpp"
#include "dualhead/head_model.hpp"
#include "dualhead/mlp.hpp"
#include "dualhead/objective.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/resize.hpp"
#include "dualhead/segmask.hpp"

namespace dualhead {

bool SuiteResult::passed() const {
  return std::all_of(reports.begin(), reports.end(), [](const GradcheckReport& r) { return r.passed(); });
}

namespace {

constexpr int kInstances = 3;
constexpr float kSmallFeatureGain = 20.0f;
constexpr float kLargeFeatureGain = 100.0f;
// Errors are measured against the larger of the entry magnitude and the
// largest analytic gradient in the block, so float32 rounding in the forward
// pass cannot fail entries that are tiny next to their neighbours.
constexpr double kFloorFraction = 1.0;

GradcheckReport check(std::string name, const std::function<double()>& f, std::span<float> params,
                      std::span<const float> analytic, double tol, double step, size_t max_checks,
                      uint64_t seed, std::function<uint64_t()> regime = {}) {
  GradcheckOptions o;
  o.regime = std::move(regime);
  o.step = step;
  o.tolerance = tol;
  o.max_checks = max_checks;
  o.seed = seed;
  double amax = 0.0;
  for (float a : analytic) amax = std::max(amax, static_cast<double>(std::abs(a)));
  o.abs_floor = std::max(1e-9, kFloorFraction * amax);
  return gradcheck(f, params, analytic, o, std::move(name));
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float scale = 1.0f) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> n(0.0f, scale);
  for (float& v : t.values()) v = n(rng);
  return t;
}

double weighted_sum(const Tensor& w, const Tensor& x) { return dot(w.values(), x.values()); }

std::string tag(const char* what, int instance) { return std::string(what) + "#" + std::to_string(instance); }

const HeadModel& desk() {
  static const HeadModel model = make_desk_model();
  return model;
}

Camera front_camera(double azimuth) {
  Camera c;
  c.pose.azimuth_deg = static_cast<float>(azimuth);
  return c;
}

// World-space step equivalent to `ndc_step` for points near the origin.
double world_step(const Camera& c, double ndc_step) {
  const auto frame = make_camera_frame(c);
  return ndc_step * c.pose.radius / frame.focal;
}

std::vector<Vec3> random_triangle(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-0.08f, 0.08f);
  for (;;) {
    std::vector<Vec3> t{{u(rng), u(rng), 0.0f}, {u(rng), u(rng), 0.0f}, {u(rng), u(rng), 0.0f}};
    const Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
    if (std::abs(n.z) > 4e-3f) return t;
  }
}

std::span<float> as_floats(std::vector<Vec3>& v) { return {&v[0].x, v.size() * 3}; }
std::vector<float> flat(const std::vector<Vec3>& v) {
  std::vector<float> out;
  for (const auto& p : v) out.insert(out.end(), {p.x, p.y, p.z});
  return out;
}

void suite_mlp(SuiteResult& r, uint64_t seed) {
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(seed * 1000 + 11 + i);
    MlpParams p = make_offset_mlp(kFeatureDim, rng);
    // Give the final layer and all biases non-zero values so every path is live.
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    const float bound = std::sqrt(6.0f / kOffsetHiddenWidth);
    for (float& w : p.layers.back().weight) w = bound * u(rng);
    for (auto& l : p.layers) {
      for (float& b : l.bias) b = 0.1f * u(rng);
    }
    Tensor x = random_tensor({4, 3 + kFeatureDim}, rng);
    const Tensor w = random_tensor({4, 3}, rng);
    MlpTrace trace;
    mlp_forward(p, x, &trace);
    const MlpGradients g = mlp_backward(p, x, trace, w);
    MlpTrace last;
    auto f = [&] { return weighted_sum(w, mlp_forward(p, x, &last)); };
    auto regime = [&] { return relu_pattern(last); };
    for (size_t l = 0; l < p.layers.size(); ++l) {
      r.reports.push_back(check(tag(("mlp.W" + std::to_string(l)).c_str(), i), f, p.layers[l].weight,
                                g.layers[l].weight, 1e-3, 1e-3, 48, seed + l, regime));
      r.reports.push_back(check(tag(("mlp.b" + std::to_string(l)).c_str(), i), f, p.layers[l].bias,
                                g.layers[l].bias, 1e-3, 1e-3, 24, seed + l, regime));
    }
    r.reports.push_back(
        check(tag("mlp.input", i), f, x.values(), g.input.values(), 1e-3, 1e-3, 0, seed, regime));
  }
}

void suite_resize(SuiteResult& r, uint64_t seed) {
  const std::array<std::array<int, 5>, kInstances> cases{{{2, 3, 3, 2, 2}, {1, 5, 7, 3, 4}, {3, 4, 4, 8, 8}}};
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(seed * 1000 + 21 + i);
    const auto& c = cases[i];
    Tensor x = random_tensor({c[0], c[1], c[2]}, rng);
    const Tensor w = random_tensor({c[0], c[3], c[4]}, rng);
    const Tensor g = bilinear_resize_backward(x.shape(), w);
    auto f = [&] { return weighted_sum(w, bilinear_resize(x, c[3], c[4])); };
    r.reports.push_back(check(tag("resize", i), f, x.values(), g.values(), 1e-3, 1e-3, 0, seed));
  }
}

void suite_raster(SuiteResult& r, uint64_t seed) {
  const HeadModel& m = desk();
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(seed * 1000 + 31 + i);
    std::uniform_real_distribution<double> az(-30.0, 30.0);
    const Camera cam = front_camera(az(rng));

    Tensor tex = random_tensor({4, 8, 8}, rng);
    RasterSettings rs;
    rs.width = rs.height = 16;
    const RenderOutput out = render_features(m.template_vertices, m.faces, m.uv, tex, cam, rs);
    const Tensor w = random_tensor(out.features.shape(), rng);
    const Tensor g = render_features_backward(out, w);
    auto f = [&] {
      return weighted_sum(w, render_features(m.template_vertices, m.faces, m.uv, tex, cam, rs).features);
    };
    r.reports.push_back(check(tag("texture", i), f, tex.values(), g.values(), 1e-3, 1e-3, 0, seed));

    Tensor tex2 = random_tensor({4, 16, 16}, rng);
    BackgroundSpec bg;
    bg.color_a = {0.3f, -0.2f, 0.1f, 0.5f};
    const HiLoOutput hl = render_hi_lo(m.template_vertices, m.faces, m.uv, tex2, cam, 128, 16, &bg);
    const Tensor w2 = random_tensor(hl.features.shape(), rng);
    Tensor g2(tex2.shape());
    accumulate_hi_lo_texture_gradient(hl, w2, g2);
    auto f2 = [&] {
      return weighted_sum(w2, render_hi_lo(m.template_vertices, m.faces, m.uv, tex2, cam, 128, 16, &bg).features);
    };
    r.reports.push_back(check(tag("hi_lo_texture", i), f2, tex2.values(), g2.values(), 1e-3, 1e-3, 0, seed));

    std::vector<Vec3> tri = random_triangle(rng);
    const std::vector<Face> faces{{0, 1, 2}};
    RasterSettings soft;
    soft.mode = RasterMode::kSoft;
    soft.width = soft.height = 8;
    soft.sigma = std::array<float, 3>{1e-2f, 3e-3f, 1e-3f}[i];
    const Camera c0 = front_camera(0.0);
    const SoftMaskOutput so = render_soft_mask(tri, faces, c0, soft);
    const Tensor w3 = random_tensor(so.mask.shape(), rng);
    const auto g3 = flat(render_soft_mask_backward(so, w3));
    auto f3 = [&] { return weighted_sum(w3, render_soft_mask(tri, faces, c0, soft).mask); };
    r.reports.push_back(
        check(tag("soft_mask_vertices", i), f3, as_floats(tri), g3, 2e-2, world_step(c0, 1e-4), 0, seed));
  }
}

void suite_seg(SuiteResult& r, uint64_t seed) {
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(seed * 1000 + 41 + i);
    std::vector<Vec3> tri = random_triangle(rng);
    std::vector<Vec3> target = tri;
    std::normal_distribution<float> jitter(0.0f, 0.01f);
    for (auto& v : target) v += Vec3{jitter(rng), jitter(rng), 0.0f};
    const std::vector<Face> faces{{0, 1, 2}};
    const Camera cam = front_camera(0.0);
    const Mask ref = rasterize_hard(target, faces, cam, 32, 32).coverage();
    RasterSettings soft;
    soft.mode = RasterMode::kSoft;
    soft.width = soft.height = 8;
    soft.sigma = 5e-3f;
    const SoftMaskOutput so = render_soft_mask(tri, faces, cam, soft);
    const SegLossResult seg = seg_loss(ref, so.mask, 1000.0f);
    const auto g = flat(render_soft_mask_backward(so, seg.mask_adjoint));
    auto f = [&] { return seg_loss(ref, render_soft_mask(tri, faces, cam, soft).mask, 1000.0f).value; };
    r.reports.push_back(check(tag("seg_loss_vertices", i), f, as_floats(tri), g, 2e-2, world_step(cam, 1e-4), 0, seed));
  }
}

AvatarState random_state(const HeadModel& m, std::mt19937_64& rng, float feature_gain) {
  AvatarInit init;
  init.texture_size = 4;
  init.enlarge_iterations = 1;
  AvatarState s = initialize_avatar(m, init, rng);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& w : s.mlp.layers.back().weight) w = u(rng);
  for (auto& l : s.mlp.layers) {
    for (float& b : l.bias) b = 0.05f * u(rng);
  }
  for (float& c : s.features.values()) c *= feature_gain;
  for (float& b : s.beta) b = 0.1f * u(rng);
  // Rescale the output layer so tanh works in its unsaturated range.
  MlpTrace trace;
  mlp_forward(s.mlp, posed_vertices(m, s, ArticulationPose::neutral(m)).mlp_input, &trace);
  double ss = 0.0;
  for (float z : trace.pre_activations.back()) ss += static_cast<double>(z) * z;
  const float rms = static_cast<float>(std::sqrt(ss / trace.pre_activations.back().size()));
  auto& last = s.mlp.layers.back();
  for (float& w : last.weight) w *= 0.5f / rms;
  for (float& b : last.bias) b *= 0.5f / rms;
  return s;
}

// Checks sum(w . posed) against posed_vertices_backward. With `network` set
// the MLP layers are checked, otherwise beta and the vertex features.
void check_posed(SuiteResult& r, const HeadModel& m, AvatarState& s, const ArticulationPose& pose,
                 const std::vector<Vec3>& w, bool network, int i, uint64_t seed) {
  const PoseEvaluation ev = posed_vertices(m, s, pose);
  const GeometryGradients g = posed_vertices_backward(m, s, ev, w);
  uint64_t pattern = 0;
  auto f = [&] {
    const PoseEvaluation e = posed_vertices(m, s, pose);
    pattern = relu_pattern(e.mlp_trace);
    double acc = 0.0;
    for (size_t k = 0; k < e.posed.size(); ++k) acc += static_cast<double>(dot(w[k], e.posed[k]));
    return acc;
  };
  auto regime = [&] { return pattern; };
  if (!network) {
    r.reports.push_back(check(tag("posed.beta", i), f, s.beta, g.beta, 1e-3, 1e-3, 0, seed));
    r.reports.push_back(check(tag("posed.features", i), f, s.features.values(), g.features.values(), 1e-3,
                              1e-3, 64, seed, regime));
    return;
  }
  size_t offset = 0;
  for (size_t l = 0; l < s.mlp.layers.size(); ++l) {
    auto& layer = s.mlp.layers[l];
    const std::span<const float> gw(g.mlp.data() + offset, layer.weight.size());
    offset += layer.weight.size();
    const std::span<const float> gb(g.mlp.data() + offset, layer.bias.size());
    offset += layer.bias.size();
    r.reports.push_back(check(tag(("posed.W" + std::to_string(l)).c_str(), i), f, layer.weight, gw, 1e-3, 1e-3,
                              32, seed + l, regime));
    r.reports.push_back(check(tag(("posed.b" + std::to_string(l)).c_str(), i), f, layer.bias, gb, 1e-3, 1e-3,
                              16, seed + l, regime));
  }
}

void suite_geom(SuiteResult& r, uint64_t seed) {
  const HeadModel& m = desk();
  for (int i = 0; i < kInstances; ++i) {
    std::mt19937_64 rng(seed * 1000 + 51 + i);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    ArticulationPose pose = ArticulationPose::neutral(m);
    for (float& e : pose.expression) e = 0.5f * u(rng);
    for (auto& phi : pose.joint_rotations) phi = {0.2f * u(rng), 0.2f * u(rng), 0.2f * u(rng)};
    std::vector<Vec3> w(m.num_vertices());
    std::normal_distribution<float> n(1.0f, 1.0f);
    for (auto& v : w) v = {n(rng), n(rng), n(rng)};

    // Float32 rounding of the posed vertices sets the noise floor. Small
    // features give large feature gradients; large features keep ReLU
    // pre-activations far from zero when weights and biases move.
    AvatarState s = random_state(m, rng, kSmallFeatureGain);
    check_posed(r, m, s, pose, w, false, i, seed);
    AvatarState big = random_state(m, rng, kLargeFeatureGain);
    check_posed(r, m, big, pose, w, true, i, seed);
    const PoseEvaluation ev = posed_vertices(m, s, pose);

    // Laplacian prior on vertex positions.
    const VertexAdjacency adj = build_adjacency(m.faces, m.num_vertices());
    const auto lap_t = uniform_laplacian(adj, m.template_vertices);
    std::vector<Vec3> verts = ev.posed;
    const std::array<float, 4> scales{0.1f, 0.5f, 0.5f, 1.0f};
    const auto prior = loss_prior(adj, verts, lap_t, m.regions, scales);
    auto fp = [&] { return loss_prior(adj, verts, lap_t, m.regions, scales).value; };
    r.reports.push_back(check(tag("loss_prior.vertices", i), fp, as_floats(verts), flat(prior.grad), 1e-3, 1e-3,
                              64, seed));

    // Combined geometry loss with respect to beta.
    RegWeights weights;
    RasterSettings soft;
    soft.mode = RasterMode::kSoft;
    soft.width = soft.height = 16;
    soft.sigma = 3e-3f;
    const GeometryContext ctx = GeometryContext::create(m, weights, soft, front_camera(0.0));
    std::uniform_real_distribution<double> az(-30.0, 30.0);
    const double a = az(rng);
    DeskModelSpec target_spec;
    target_spec.axes = {0.85f, 1.1f, 0.9f};
    const HeadModel target = make_desk_model(target_spec);
    const Mask ref = rasterize_hard(target.template_vertices, target.faces, front_camera(a), 64, 64).coverage();
    const GeometryLossResult total = total_geometry_loss(ctx, s, &ref, a);
    auto ft = [&] { return total_geometry_loss(ctx, s, &ref, a).parts.total; };
    r.reports.push_back(check(tag("geometry_total.beta", i), ft, s.beta, total.grads.beta, 1e-2, 1e-3, 0, seed));
  }
}

}  // namespace

std::vector<std::string> gradcheck_suite_names() { return {"mlp", "resize", "raster", "seg", "geom"}; }

std::vector<SuiteResult> run_gradcheck_suite(const std::string& name, uint64_t seed) {
  std::vector<std::string> names;
  if (name == "all") {
    names = gradcheck_suite_names();
  } else {
    const auto all = gradcheck_suite_names();
    if (std::find(all.begin(), all.end(), name) == all.end()) {
      throw ConfigError("unknown gradcheck suite '" + name + "'");
    }
    names = {name};
  }
  std::vector<SuiteResult> out;
  for (const auto& n : names) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.suite = n;
    if (n == "mlp") suite_mlp(r, seed);
    if (n == "resize") suite_resize(r, seed);
    if (n == "raster") suite_raster(r, seed);
    if (n == "seg") suite_seg(r, seed);
    if (n == "geom") suite_geom(r, seed);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dualhead
