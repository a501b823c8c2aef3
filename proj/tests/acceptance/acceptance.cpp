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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dualhead/checkpoint.hpp"
#include "dualhead/config.hpp"
#include "dualhead/gradcheck_suites.hpp"
#include "dualhead/guidance.hpp"
#include "dualhead/mesh.hpp"
#include "dualhead/objective.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/schedule.hpp"
#include "dualhead/segmask.hpp"
#include "dualhead/session.hpp"
#include "dualhead/trainloop.hpp"

using namespace dualhead;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck_suite("all", 0);
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  double worst = 0.0;
  size_t reports = 0;
  std::string failed;
  for (const auto& r : results) {
    ok = ok && r.passed();
    if (!r.passed()) failed += " " + r.suite;
    for (const auto& rep : r.reports) {
      worst = std::max(worst, rep.max_rel_error);
      ++reports;
    }
  }
  return {ok, fmt("%zu suites, %zu reports, worst rel err %.2e, %.1f s (limit 60 s)%s", results.size(), reports,
                  worst, secs, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Outcome articulation_identity() {
  const HeadModel m = make_desk_model();
  auto rng = iteration_rng(0, -1, 1);
  AvatarInit init;
  init.texture_size = 8;
  init.enlarge_iterations = 3;
  const AvatarState s = initialize_avatar(m, init, rng);
  const PoseEvaluation e = posed_vertices(m, s, ArticulationPose::neutral(m));
  size_t mismatched = 0;
  for (size_t i = 0; i < m.num_vertices(); ++i) {
    mismatched += !(e.posed[i] == m.template_vertices[i] + s.base_offsets[i]);
  }
  // Skinning with identity transforms, evaluated through the general path.
  const std::vector<Vec3> zero(m.num_joints());
  const auto xf = skinning_transforms(m, zero);
  double lbs_err = 0.0;
  std::mt19937_64 r2(3);
  std::normal_distribution<float> n(0.0f, 0.1f);
  for (size_t i = 0; i < m.num_vertices(); ++i) {
    const Vec3 p{n(r2), n(r2), n(r2)};
    Vec3 acc;
    for (size_t k = 0; k < m.num_joints(); ++k) acc += xf[k].apply(p) * m.skinning_weights[i * m.num_joints() + k];
    lbs_err = std::max<double>(lbs_err, norm(acc - p));
  }
  const auto fast = lbs(m, m.template_vertices, zero);
  const bool fast_exact = fast == m.template_vertices;
  return {mismatched == 0 && lbs_err <= 1e-6 && fast_exact,
          fmt("%zu/%zu vertices differ from the enlarged template; zero-rotation LBS max err %.2e (limit 1e-6)",
              mismatched, m.num_vertices(), lbs_err)};
}

Outcome schedule_conformance() {
  const RunConfig c;
  const Schedule& s = c.schedule;
  // Expected run-length encoding of phases.
  std::vector<std::pair<Phase, int64_t>> expect{{Phase::kTextureOnly, 6000}};
  for (int64_t it = 6000; it < s.total_iters;) {
    const int64_t d = std::min<int64_t>(4000, s.total_iters - it);
    expect.push_back({Phase::kDual, d});
    it += d;
    if (it >= s.total_iters) break;
    const int64_t t = std::min<int64_t>(2000, s.total_iters - it);
    expect.push_back({Phase::kTextureOnly, t});
    it += t;
  }
  std::vector<std::pair<Phase, int64_t>> got;
  for (int64_t it = 0; it < s.total_iters; ++it) {
    const Phase p = phase_of(s, it);
    if (got.empty() || got.back().first != p) got.push_back({p, 0});
    got.back().second++;
  }
  const bool phases_ok = got == expect;
  auto r0 = iteration_rng(c.seed, 0);
  auto r1 = iteration_rng(c.seed, 2000);
  const double a0 = alpha_at(c.alpha, 0, r0), a2000 = alpha_at(c.alpha, 2000, r1);
  double sum = 0.0, lo = 1.0, hi = 0.0;
  for (int64_t i = 0; i < 1000; ++i) {
    auto r = iteration_rng(c.seed, 4000 + i);
    const double a = alpha_at(c.alpha, 4000 + i, r);
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  const double mean = sum / 1000.0;
  const bool ok = phases_ok && a0 == 0.0 && a2000 == 0.5 && lo >= 0.6 && hi <= 1.0 && mean >= 0.78 && mean <= 0.82;
  return {ok, fmt("%zu phase blocks %s; alpha(0)=%.3f alpha(2000)=%.3f; post-ramp range [%.3f, %.3f] mean %.4f",
                  got.size(), phases_ok ? "match 6000 + 4000/2000" : "MISMATCH", a0, a2000, lo, hi, mean)};
}

Outcome sds_algebra() {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> n;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Tensor eps({4, 64, 64}), g({4, 64, 64});
    for (auto& v : eps.values()) v = n(rng);
    for (auto& v : g.values()) v = n(rng);
    const float w = std::exp(n(rng));
    const Tensor zero = sds_grad_formula(eps, eps, w);
    for (float v : zero.values()) worst = std::max<double>(worst, std::abs(v));
    Tensor out = eps;
    for (size_t i = 0; i < out.size(); ++i) out[i] = eps[i] + w * g[i];
    const Tensor back = sds_grad_formula(out, eps, w);
    for (size_t i = 0; i < g.size(); ++i) worst = std::max<double>(worst, std::abs(back[i] - g[i]));
  }
  return {worst <= 1e-6, fmt("max error %.2e over 5 random [4,64,64] cases (limit 1e-6)", worst)};
}

Outcome texture_convergence() {
  const HeadModel m = make_desk_model();
  RunConfig c = desk_preset();
  c.schedule.total_iters = 2000;
  c.schedule.initial_texture_iters = 2000;
  // Frontal view, fixed backdrop and no shading blend, so the analytic target
  // is reachable exactly.
  c.schedule.azimuth_min = c.schedule.azimuth_max = 0.0f;
  c.background.randomize = false;
  c.alpha.ramp_iters = 0;
  c.alpha.post_min = c.alpha.post_max = 1.0f;
  c.render.feature_resolution = 16;
  c.render.hi_resolution = 128;
  c.checkpoint_every = 0;

  // Target: a render of a smooth random texture.
  std::mt19937_64 rng(5);
  AvatarState target_state = initialize_avatar(m, c.init, rng);
  const int64_t ts = c.init.texture_size;
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int64_t k = 0; k < 4; ++k) {
    const float a = u(rng), b = u(rng), p = u(rng);
    for (int64_t y = 0; y < ts; ++y)
      for (int64_t x = 0; x < ts; ++x) {
        target_state.texture.at(k, y, x) = 0.5f * a * std::sin(4.0f * float(M_PI) * x / ts + p) +
                                           0.5f * b * std::cos(2.0f * float(M_PI) * y / ts);
      }
  }
  const TargetMeshMaskSource masks(m.template_vertices, m.faces, make_camera(c.render, 0.7f, 0, 0));
  const AnalyticTargetProvider placeholder(Tensor({4, 16, 16}));
  const Trainer renderer(m, c, placeholder, masks, {}, default_decoder());
  const Tensor target = renderer.render_features_at(target_state, ArticulationPose::neutral(m), 0, 0);
  const AnalyticTargetProvider guidance(target);
  Trainer trainer(m, c, guidance, masks, {}, default_decoder());
  TrainState s = trainer.initial_state();
  auto mse = [&] {
    const Tensor f = trainer.render_features_at(s.avatar, ArticulationPose::neutral(m), 0, 0);
    return mean_squared_difference(f.values(), target.values());
  };
  const double before = mse();
  const auto t0 = Clock::now();
  trainer.run(s, 2000);
  const double secs = seconds_since(t0);
  const double after = mse();
  size_t dual = 0;
  for (const auto& r : trainer.log()) dual += r.phase == Phase::kDual;
  return {after < 1e-4 && secs < 120.0 && dual == 0 && s.iteration == 2000,
          fmt("feature MSE %.3e -> %.3e after %lld texture-only iterations (limit 1e-4), %.1f s (limit 120 s)",
              before, after, static_cast<long long>(s.iteration), secs)};
}

Outcome geometry_convergence() {
  DeskModelSpec spec;
  spec.axes = {1.0f, 1.0f, 1.0f};  // sphere
  const HeadModel m = make_desk_model(spec);
  std::vector<Vec3> target = m.template_vertices;
  for (Vec3& v : target) v = {v.x * 0.75f, v.y * 1.05f, v.z * 0.8f};

  const int iters = 1500;
  RunConfig c = desk_preset();
  c.schedule.total_iters = iters;
  c.schedule.initial_texture_iters = 0;
  c.schedule.dual_block = iters;
  c.schedule.texture_block = 1;
  c.schedule.lut_refresh = 500;
  c.render.soft.width = c.render.soft.height = 128;
  c.render.soft.sigma = 2.5e-5f;
  c.segment.lut.resolution = 128;
  c.init.texture_size = 8;
  c.alpha.ramp_iters = 0;
  c.alpha.post_min = c.alpha.post_max = 1.0f;
  c.checkpoint_every = 0;
  const AnalyticTargetProvider guidance(Tensor({4, c.render.feature_resolution, c.render.feature_resolution}));
  const TargetMeshMaskSource masks(target, m.faces, make_camera(c.render, c.schedule.camera_radius, 0, 0));
  Trainer trainer(m, c, guidance, masks, {}, default_decoder());
  TrainState s = trainer.initial_state();

  struct IouStats {
    double min = 1.0, max = 0.0;
  };
  auto ious = [&](const AvatarState& st) {
    const auto posed = posed_vertices(m, st, ArticulationPose::neutral(m)).posed;
    IouStats r;
    for (int a = -30; a <= 30; ++a) {
      const Camera cam = make_camera(c.render, c.schedule.camera_radius, a, 0);
      const double iou =
          mask_iou(rasterize_hard(posed, m.faces, cam, 128, 128).coverage(), masks.reference(st, a, 128));
      r.min = std::min(r.min, iou);
      r.max = std::max(r.max, iou);
    }
    return r;
  };
  const IouStats before = ious(s.avatar);
  const auto t0 = Clock::now();
  trainer.run(s, iters);
  const double secs = seconds_since(t0);
  const IouStats after = ious(s.avatar);
  bool finite = true;
  for (const auto& r : trainer.log()) finite = finite && std::isfinite(r.geometry.lap) && std::isfinite(r.geometry.prior);
  const auto posed = posed_vertices(m, s.avatar, ArticulationPose::neutral(m)).posed;
  const bool self_int = mesh_self_intersects(posed, m.faces);
  return {before.max < 0.8 && after.min > 0.95 && finite && !self_int,
          fmt("IoU over 61 azimuths: max %.3f before (limit < 0.8), min %.3f after %d dual iterations (limit > 0.95); "
              "lap/prior finite: %s; self-intersecting: %s; %.1f s",
              before.max, after.min, iters, finite ? "yes" : "no", self_int ? "yes" : "no", secs)};
}

Outcome regularizer_zeros() {
  const HeadModel m = make_desk_model();
  const VertexAdjacency adj = build_adjacency(m.faces, m.num_vertices());
  const auto lt = uniform_laplacian(adj, m.template_vertices);
  const RegWeights w;
  const double off = loss_off(std::vector<Vec3>(m.num_vertices())).value;
  const double prior = loss_prior(adj, m.template_vertices, lt, m.regions, w.region_scale).value;
  const Mask ref = rasterize_hard(m.template_vertices, m.faces, Camera{}, 64, 64).coverage();
  Tensor exact({64, 64});
  for (size_t i = 0; i < ref.data.size(); ++i) exact[i] = ref.data[i];
  const double seg = seg_loss(ref, exact, w.seg_lambda).value;

  // Paired perturbations: the same displacement of the same vertex with its
  // one-ring labelled scalp, then other.
  std::mt19937_64 rng(17);
  std::normal_distribution<float> n(0.0f, 0.004f);
  std::uniform_int_distribution<size_t> pick(0, m.num_vertices() - 1);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const size_t i = pick(rng);
    std::vector<Vec3> v = m.template_vertices;
    v[i] += Vec3{n(rng), n(rng), n(rng)};
    std::vector<Region> scalp = m.regions, other = m.regions;
    scalp[i] = Region::kScalp;
    other[i] = Region::kOther;
    for (int32_t k : adj.of(i)) {
      scalp[k] = Region::kScalp;
      other[k] = Region::kOther;
    }
    const double ls = loss_prior(adj, v, lt, scalp, w.region_scale).value;
    const double lo = loss_prior(adj, v, lt, other, w.region_scale).value;
    worst = std::max(worst, std::abs(ls / lo - 0.1));
  }
  const bool ok = off == 0.0 && prior == 0.0 && seg == 0.0 && worst <= 1e-5;
  return {ok, fmt("L_off %.1e, L_prior %.1e, seg %.1e at zero; scalp:other ratio deviation %.1e over 20 pairs", off,
                  prior, seg, worst)};
}

Outcome determinism_and_resume() {
  RunConfig c = desk_preset();
  c.checkpoint_every = 0;
  const RunAssets assets = load_run_assets(c);
  const auto masks = make_mask_source(c, assets);
  const AnalyticTargetProvider placeholder(Tensor({1, 1, 1}));
  const TrainState fresh = Trainer(assets.model, c, placeholder, *masks, {}, assets.decoder).initial_state();
  const auto guidance = make_guidance(c, assets, fresh.avatar);
  const fs::path dir = fs::temp_directory_path() / "dualhead_acceptance_resume";
  fs::remove_all(dir);

  auto run = [&](TrainState s, int64_t stop, const fs::path& out) {
    Trainer t(assets.model, c, *guidance, *masks, {}, assets.decoder);
    t.run(s, stop, out);
    return s;
  };
  const auto t0 = Clock::now();
  const TrainState a = run(fresh, 200, {});
  const TrainState b = run(fresh, 200, {});
  run(fresh, 100, dir);
  const TrainState mid = load_checkpoint(dir / "final.ckp");
  const TrainState resumed = run(mid, 200, {});
  const double secs = seconds_since(t0);
  fs::remove_all(dir);
  const bool same = avatar_bits_equal(a.avatar, b.avatar) && a.optim == b.optim;
  const bool resume = avatar_bits_equal(a.avatar, resumed.avatar) && a.optim == resumed.optim;
  const bool moved = geometry_hash(a.avatar) != geometry_hash(fresh.avatar);
  return {same && resume && moved && mid.iteration == 100,
          fmt("200-iteration desk run: repeat %s, resume at 100 %s, geometry updated %s; %.1f s",
              same ? "bit-identical" : "DIFFERS", resume ? "bit-identical" : "DIFFERS", moved ? "yes" : "no", secs)};
}

// Point-in-triangle with the opposite-vertex side test; boundary counts.
bool inside(double px, double py, const std::array<double, 6>& t) {
  for (int k = 0; k < 3; ++k) {
    const double ax = t[2 * k], ay = t[2 * k + 1];
    const double bx = t[2 * ((k + 1) % 3)], by = t[2 * ((k + 1) % 3) + 1];
    const double cx = t[2 * ((k + 2) % 3)], cy = t[2 * ((k + 2) % 3) + 1];
    const double sp = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    const double sc = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    if (sp * sc < 0.0) return false;
  }
  return true;
}

Outcome raster_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.1, 1.1);
  int exact = 0;
  size_t pixels = 0, mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 48, h = 40;
    std::array<double, 6> t;
    for (double& x : t) x = u(rng);
    const std::vector<ProjectedVertex> pv{{t[0], t[1], 1.0}, {t[2], t[3], 1.0}, {t[4], t[5], 1.0}};
    const std::vector<Face> faces{{0, 1, 2}};
    const Fragments fr = rasterize_hard_ndc(pv, faces, w, h);
    size_t bad = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const bool expect = inside(pixel_center_ndc_x(x, w), pixel_center_ndc_y(y, h), t);
        bad += (fr.face[static_cast<size_t>(y) * w + x] == 0) != expect;
      }
    exact += bad == 0;
    pixels += static_cast<size_t>(w) * h;
    mismatches += bad;
  }
  return {exact == 100, fmt("%d/100 random triangles match brute force exactly (%zu mismatching of %zu pixels)", exact,
                            mismatches, pixels)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"articulation-identity", articulation_identity},
      {"schedule-conformance", schedule_conformance},
      {"sds-algebra", sds_algebra},
      {"texture-convergence", texture_convergence},
      {"geometry-convergence", geometry_convergence},
      {"regularizer-zeros", regularizer_zeros},
      {"determinism-resume", determinism_and_resume},
      {"raster-oracle", raster_oracle},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
