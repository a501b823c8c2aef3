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
#include <fstream>
#include <random>

#include "doctest.h"
#include "dualhead/checkpoint.hpp"
#include "dualhead/config.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/schedule.hpp"
#include "dualhead/session.hpp"
#include "dualhead/trainloop.hpp"
#include "json.hpp"

using namespace dualhead;
namespace fs = std::filesystem;

namespace {

// Short schedule: 6 texture-only, then 6 dual / 3 texture blocks.
RunConfig small_config() {
  RunConfig c = desk_preset();
  c.schedule.total_iters = 24;
  c.schedule.initial_texture_iters = 6;
  c.schedule.dual_block = 6;
  c.schedule.texture_block = 3;
  c.schedule.lut_refresh = 4;
  c.alpha.ramp_iters = 4;
  c.render.hi_resolution = 64;
  c.render.feature_resolution = 8;
  c.render.soft.width = c.render.soft.height = 32;
  c.render.soft.sigma = 4e-4f;
  c.segment.lut.resolution = 32;
  c.segment.lut.azimuth_min = -10;
  c.segment.lut.azimuth_max = 10;
  c.schedule.azimuth_min = -10.0f;
  c.schedule.azimuth_max = 10.0f;
  c.init.texture_size = 16;
  c.checkpoint_every = 0;
  return c;
}

struct Fixture {
  HeadModel model = make_desk_model();
  RunConfig config = small_config();
  AnalyticTargetProvider guidance{Tensor({4, 8, 8}, 0.3f)};
  TargetMeshMaskSource masks;
  Fixture()
      : masks([&] {
          std::vector<Vec3> t = model.template_vertices;
          for (Vec3& v : t) v = {v.x * 0.9f, v.y, v.z * 0.9f};
          return t;
        }(),
              model.faces, make_camera(RenderConfig{}, 0.7f, 0, 0)) {}
  Trainer trainer() const { return Trainer(model, config, guidance, masks, {}, default_decoder()); }
};

class FailingProvider final : public GuidanceProvider {
 public:
  GuidanceResponse compute(const GuidanceRequest&) const override { throw GuidanceError("server down", 3); }
  std::string name() const override { return "failing"; }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dualhead_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("default schedule phases") {
  const Schedule s;
  CHECK(phase_of(s, 0) == Phase::kTextureOnly);
  CHECK(phase_of(s, 5999) == Phase::kTextureOnly);
  CHECK(phase_of(s, 6000) == Phase::kDual);
  CHECK(phase_of(s, 9999) == Phase::kDual);
  CHECK(phase_of(s, 10000) == Phase::kTextureOnly);
  CHECK(phase_of(s, 10500) == Phase::kTextureOnly);
  CHECK(phase_of(s, 12000) == Phase::kDual);
  // Independent walk over the block structure.
  int64_t it = 0, tex = 0, dual = 0;
  std::vector<int64_t> rebuilds;
  int64_t dual_seen = 0;
  auto walk = [&](int64_t n, bool is_dual) {
    for (int64_t k = 0; k < n && it < s.total_iters; ++k, ++it) {
      CHECK(phase_of(s, it) == (is_dual ? Phase::kDual : Phase::kTextureOnly));
      if (is_dual) {
        if (dual_seen % s.lut_refresh == 0) rebuilds.push_back(it);
        ++dual_seen;
        ++dual;
      } else {
        ++tex;
      }
    }
  };
  walk(s.initial_texture_iters, false);
  while (it < s.total_iters) {
    walk(s.dual_block, true);
    walk(s.texture_block, false);
  }
  const PhaseCounts c = count_phases(s);
  CHECK(c.texture_only == tex);
  CHECK(c.dual == dual);
  CHECK(tex == 10000);
  std::vector<int64_t> due;
  for (int64_t i = 0; i < s.total_iters; ++i)
    if (lut_rebuild_due(s, i)) due.push_back(i);
  CHECK(due == rebuilds);
  CHECK(due == std::vector<int64_t>{6000, 8000, 12000, 14000, 18000});
}

TEST_CASE("per-iteration random streams") {
  auto a = iteration_rng(7, 100, 0), b = iteration_rng(7, 100, 0);
  auto c = iteration_rng(7, 101, 0), d = iteration_rng(7, 100, 1), e = iteration_rng(8, 100, 0);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(x != e());
  const Schedule s;
  BackgroundOptions bg;
  for (int i = 0; i < 100; ++i) {
    auto rng = iteration_rng(1, i);
    const StepInputs in = sample_step_inputs(s, 5, bg, rng);
    CHECK(in.pose_index < 5);
    CHECK(in.azimuth >= -30.0);
    CHECK(in.azimuth <= 30.0);
    CHECK(in.background.color_a.size() == 4);
  }
}

TEST_CASE("config json round trip and validation") {
  const RunConfig d = desk_preset();
  CHECK_NOTHROW(d.validate());
  const std::string text = run_config_to_json(d);
  CHECK(run_config_to_json(run_config_from_json(text)) == text);
  const RunConfig partial = run_config_from_json(R"({"seed": 9, "schedule": {"total_iters": 10}})");
  CHECK(partial.seed == 9);
  CHECK(partial.schedule.total_iters == 10);
  CHECK(partial.schedule.dual_block == Schedule{}.dual_block);
  CHECK_THROWS_AS(run_config_from_json(R"({"sede": 1})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"lr_texture": -1})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"guidance": {"kind": "oracle"}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("[1,2"), ConfigError);
  RunConfig bad = d;
  bad.segment.lut.resolution = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("full-scale defaults") {
  const RunConfig c;
  CHECK(c.schedule.total_iters == 20000);
  CHECK(c.schedule.initial_texture_iters == 6000);
  CHECK(c.schedule.dual_block == 4000);
  CHECK(c.schedule.texture_block == 2000);
  CHECK(c.schedule.lut_refresh == 2000);
  CHECK(c.lr_texture == 8e-3f);
  CHECK(c.lr_geometry == 1e-4f);
  CHECK(c.weights.lambda1 == 0.5f);
  CHECK(c.weights.lambda2 == 5000.0f);
  CHECK(c.weights.lambda3 == 5000.0f);
  CHECK(c.weights.seg_lambda == 1000.0f);
  CHECK(c.render.feature_resolution == 64);
  CHECK(c.render.hi_resolution == 512);
  CHECK(c.render.soft.faces_per_pixel == 75);
  CHECK(c.render.soft.sigma == 1e-4f);
  CHECK(c.guidance.cfg_scale == 100.0f);
  CHECK(c.init.feature_dim == 32);
  CHECK(c.init.texture_size == 512);
}

TEST_CASE("pose dataset jsonl") {
  const HeadModel m = make_desk_model();
  const PoseDataset ds = make_desk_pose_dataset(m, 6, 3);
  CHECK(ds.records.size() == 6);
  CHECK_NOTHROW(ds.validate(m));
  const PoseDataset back = pose_dataset_from_jsonl(pose_dataset_to_jsonl(ds));
  REQUIRE(back.records.size() == 6);
  CHECK(back.records[2].psi == ds.records[2].psi);
  CHECK(back.records[5].phi == ds.records[5].phi);
  const PoseDataset wrong = pose_dataset_from_jsonl(R"({"psi":[0.1],"phi":[0,0,0,0,0,0]})");
  CHECK_THROWS_AS(wrong.validate(m), ConfigError);
  CHECK_THROWS_AS(pose_dataset_from_jsonl(R"({"psi":[0.1],"phi":[0,0]})"), ConfigError);
  CHECK_THROWS_AS(PoseDataset{}.validate(m), ConfigError);
}

TEST_CASE("texture-only steps leave the geometry untouched") {
  Fixture fx;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  const uint64_t h0 = geometry_hash(s.avatar);
  const Tensor tex0 = s.avatar.texture;
  for (int i = 0; i < 6; ++i) {
    const StepLog log = t.step(s);
    CHECK(log.phase == Phase::kTextureOnly);
    CHECK(log.geometry_sources == 0);
    CHECK(log.texture_sources == kGradGuidance);
    CHECK(geometry_hash(s.avatar) == h0);
  }
  CHECK_FALSE(s.avatar.texture == tex0);
  CHECK(s.optim.beta.step == 0);
  CHECK(t.log()[0].alpha == 0.0);
  CHECK(t.log()[2].alpha == 0.5);
}

TEST_CASE("dual steps route segmentation only to geometry") {
  Fixture fx;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  t.run(s, 6);
  const uint64_t h0 = geometry_hash(s.avatar);
  const StepLog log = t.step(s);
  CHECK(log.phase == Phase::kDual);
  CHECK(log.texture_sources == kGradGuidance);
  CHECK(log.geometry_sources == (kGradSegmentation | kGradRegularizer));
  CHECK(log.geometry.seg > 0.0);
  CHECK(geometry_hash(s.avatar) != h0);
  REQUIRE(s.lut.has_value());
  CHECK(s.lut->masks.size() == 21);
  // After the dual block the geometry freezes again.
  t.run(s, 12);
  const uint64_t h1 = geometry_hash(s.avatar);
  t.run(s, 15);
  CHECK(phase_of(fx.config.schedule, 14) == Phase::kTextureOnly);
  CHECK(geometry_hash(s.avatar) == h1);
}

TEST_CASE("lut rebuilds follow the dual iteration count") {
  Fixture fx;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  t.run(s, 24);
  std::vector<int64_t> rebuilds;
  for (const auto& e : t.events())
    if (e.kind == "lut_rebuild") rebuilds.push_back(e.iteration);
  // Dual iterations are 6-11, 15-20; every 4th dual iteration rebuilds.
  CHECK(rebuilds == std::vector<int64_t>{6, 10, 17});
  std::vector<int64_t> phases;
  for (const auto& e : t.events())
    if (e.kind == "phase") phases.push_back(e.iteration);
  CHECK(phases == std::vector<int64_t>{0, 6, 12, 15, 21});
}

TEST_CASE("identical seeds and resumed runs are bit-identical") {
  Fixture fx;
  const fs::path dir = scratch("resume");
  Trainer a = fx.trainer();
  TrainState sa = a.initial_state();
  a.run(sa, 24);
  Trainer b = fx.trainer();
  TrainState sb = b.initial_state();
  b.run(sb, 24);
  CHECK(avatar_bits_equal(sa.avatar, sb.avatar));
  CHECK(sa.optim == sb.optim);

  Trainer c = fx.trainer();
  TrainState sc = c.initial_state();
  c.run(sc, 13, dir);
  TrainState resumed = load_checkpoint(dir / "final.ckp");
  CHECK(resumed.iteration == 13);
  Trainer d = fx.trainer();
  d.run(resumed, 24);
  CHECK(avatar_bits_equal(sa.avatar, resumed.avatar));
  CHECK(sa.optim == resumed.optim);

  fx.config.seed = 1;
  Trainer e = fx.trainer();
  TrainState se = e.initial_state();
  e.run(se, 24);
  CHECK_FALSE(avatar_bits_equal(sa.avatar, se.avatar));
  fs::remove_all(dir);
}

TEST_CASE("checkpoint archive round trip") {
  Fixture fx;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  t.run(s, 8);
  const fs::path dir = scratch("ckpt");
  save_checkpoint(dir / "a.ckp", s);
  const TrainState back = load_checkpoint(dir / "a.ckp");
  CHECK(avatar_bits_equal(s.avatar, back.avatar));
  CHECK(back.optim == s.optim);
  CHECK(back.iteration == 8);
  CHECK(back.seed == s.seed);
  REQUIRE(back.lut.has_value());
  CHECK(back.lut->masks == s.lut->masks);
  CHECK(back.lut->built_at_iteration == 6);
  std::ofstream(dir / "junk.ckp") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckp"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("guidance failures skip the step") {
  Fixture fx;
  FailingProvider failing;
  Trainer t(fx.model, fx.config, failing, fx.masks, {}, default_decoder());
  TrainState s = t.initial_state();
  const Tensor tex0 = s.avatar.texture;
  const StepLog log = t.step(s);
  CHECK(log.skipped);
  CHECK(s.iteration == 1);
  CHECK(s.avatar.texture == tex0);
  REQUIRE(t.events().size() == 2);
  CHECK(t.events()[1].kind == "skip");
}

TEST_CASE("non-finite parameters abort with a diagnostic checkpoint") {
  Fixture fx;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  s.avatar.beta[0] = std::nanf("");
  const fs::path dir = scratch("abort");
  CHECK_THROWS_AS(t.run(s, 4, dir), NumericError);
  CHECK(fs::exists(dir / "diagnostic.ckp"));
  CHECK(t.events().back().kind == "abort");
  fs::remove_all(dir);
}

TEST_CASE("run writes logs and periodic checkpoints") {
  Fixture fx;
  fx.config.checkpoint_every = 5;
  fx.config.preview_every = 10;
  Trainer t = fx.trainer();
  TrainState s = t.initial_state();
  const fs::path dir = scratch("run");
  t.run(s, 12, dir);
  CHECK(fs::exists(dir / "ckpt_000005.ckp"));
  CHECK(fs::exists(dir / "ckpt_000010.ckp"));
  CHECK(fs::exists(dir / "preview_000010.png"));
  CHECK(fs::exists(dir / "final.ckp"));
  std::ifstream csv(dir / "losses.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("iteration,phase,alpha", 0) == 0);
  size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 12);
  std::ifstream ev(dir / "events.jsonl");
  std::string first;
  std::getline(ev, first);
  CHECK(nlohmann::json::parse(first)["kind"] == "phase");
  fs::remove_all(dir);
}

TEST_CASE("mock guidance keeps the run finite") {
  Fixture fx;
  const MockNoiseProvider mock(0, 1.0);
  Trainer t(fx.model, fx.config, mock, fx.masks, make_desk_pose_dataset(fx.model, 4, 0), default_decoder());
  TrainState s = t.initial_state();
  t.run(s, 24);
  CHECK(s.iteration == 24);
  CHECK(s.avatar.texture.all_finite());
}

TEST_CASE("session helpers") {
  const HeadModel m = make_desk_model();
  const ArticulationPose p = pose_from_json(m, "[0.5, 0, 0, -0.5]", "[[0, 0, 0], [0.1, 0.2, 0.3]]");
  CHECK(p.expression == std::vector<float>{0.5f, 0.0f, 0.0f, -0.5f});
  CHECK(p.joint_rotations[1] == Vec3{0.1f, 0.2f, 0.3f});
  CHECK(pose_from_json(m, "", "").is_rest());
  CHECK_THROWS_AS(pose_from_json(m, "[1]", ""), ConfigError);
  CHECK_THROWS_AS(pose_from_json(m, "", "[[0,0],[0,0,0]]"), ConfigError);
  CHECK_THROWS_AS(pose_from_json(m, "{", ""), ConfigError);

  const std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const std::vector<Face> f{{0, 1, 2}};
  const std::vector<std::array<float, 2>> uv{{0, 0}, {1, 0}, {0, 1}};
  const std::string obj = mesh_to_obj(v, f, uv);
  CHECK(obj.find("v 1 0 0\n") != std::string::npos);
  CHECK(obj.find("vt 0 1\n") != std::string::npos);
  CHECK(obj.find("f 1/1 2/2 3/3\n") != std::string::npos);
  CHECK(mesh_to_obj(v, f, {}).find("f 1 2 3\n") != std::string::npos);

  RunConfig c = small_config();
  const RunAssets assets = load_run_assets(c);
  CHECK(assets.model.num_vertices() == 162);
  CHECK(assets.poses.records.empty());
  std::mt19937_64 rng(0);
  const AvatarState init = initialize_avatar(assets.model, c.init, rng);
  CHECK(make_guidance(c, assets, init)->name() == "analytic");
  c.guidance.kind = "mock";
  CHECK(make_guidance(c, assets, init)->name() == "mock");
  c.guidance.kind = "remote";
  CHECK(make_guidance(c, assets, init)->name() == "remote");
  c.segment.lut.resolution = 60;
  CHECK_THROWS_AS(make_mask_source(c, assets), ConfigError);
  c.segment.lut.resolution = 64;
  CHECK(make_mask_source(c, assets)->name() == "builtin-segment");
  const Tensor rgb = render_view_rgb(assets, c, init, ArticulationPose::neutral(assets.model), 0, 0, false);
  CHECK(rgb.shape() == Shape{3, 64, 64});
  const Tensor shade = render_view_rgb(assets, c, init, ArticulationPose::neutral(assets.model), 0, 0, true);
  CHECK(shade.shape() == Shape{3, 64, 64});
}
