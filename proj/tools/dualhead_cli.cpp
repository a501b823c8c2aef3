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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dualhead/checkpoint.hpp"
#include "dualhead/chunk_io.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/gradcheck_suites.hpp"
#include "dualhead/image_io.hpp"
#include "dualhead/model_io.hpp"
#include "dualhead/session.hpp"
#include "dualhead/trainloop.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dualhead;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitGuidance = 4;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_manifest(const fs::path& path, const std::string& command, const json& flags) {
  json m;
  m["command"] = command;
  m["flags"] = flags;
  m["version"] = "0.1.0";
  write_text(path, m.dump(2) + "\n");
}

RunConfig resolve_config(const std::string& config_path, const std::string& preset) {
  if (!config_path.empty()) return load_run_config(config_path);
  if (preset == "desk") return desk_preset();
  if (preset == "full") return RunConfig{};
  throw ConfigError("unknown preset '" + preset + "' (expected desk or full)");
}

// Render settings and assets for commands that start from a checkpoint.
struct ViewSetup {
  RunConfig config;
  RunAssets assets;
};

ViewSetup view_setup(const std::string& config_path, const std::string& model_path,
                     const std::string& decoder_path) {
  ViewSetup v;
  v.config = resolve_config(config_path, "desk");
  if (!model_path.empty()) v.config.model_path = model_path;
  if (!decoder_path.empty()) v.config.decoder_path = decoder_path;
  v.config.pose_dataset_path.clear();
  v.assets = load_run_assets(v.config);
  return v;
}

void check_state_matches(const HeadModel& model, const AvatarState& s) {
  if (s.features.rank() != 2 || static_cast<size_t>(s.features.dim(0)) != model.num_vertices()) {
    throw ConfigError("checkpoint has " + std::to_string(s.features.rank() == 2 ? s.features.dim(0) : 0) +
                      " vertex features but the model has " + std::to_string(model.num_vertices()) +
                      " vertices; pass the matching --model");
  }
  if (s.beta.size() != static_cast<size_t>(model.num_shape)) {
    throw ConfigError("checkpoint shape coefficients do not match the model");
  }
}

struct OptimizeArgs {
  std::string config, preset = "desk", prompt, out_dir = "run", guidance, resume;
  int64_t seed = -1;
  int64_t stop_at = -1;
};

int cmd_optimize(const OptimizeArgs& a) {
  RunConfig config = resolve_config(a.config, a.preset);
  if (!a.prompt.empty()) config.guidance.prompt = a.prompt;
  if (!a.guidance.empty()) config.guidance.kind = a.guidance;
  if (a.seed >= 0) config.seed = static_cast<uint64_t>(a.seed);
  config.validate();

  const RunAssets assets = load_run_assets(config);
  if (config.guidance.kind == "remote" || config.segment.kind == "remote") {
    WireClient(guidance_endpoint(config.guidance)).get("/v1/health");
  }
  const auto masks = make_mask_source(config, assets);

  // The analytic target depends only on the seed, so a resumed run sees the
  // same target as the original.
  AnalyticTargetProvider placeholder(Tensor({1, 1, 1}));
  const Trainer probe(assets.model, config, placeholder, *masks, assets.poses, assets.decoder);
  const TrainState fresh = probe.initial_state();
  const auto guidance = make_guidance(config, assets, fresh.avatar);

  Trainer trainer(assets.model, config, *guidance, *masks, assets.poses, assets.decoder);
  TrainState state = fresh;
  if (!a.resume.empty()) {
    state = load_checkpoint(a.resume);
    if (a.seed >= 0 && state.seed != config.seed) {
      throw ConfigError("--seed " + std::to_string(a.seed) + " differs from the checkpoint seed " +
                        std::to_string(state.seed));
    }
    check_state_matches(assets.model, state.avatar);
  }

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_text(out / "config.json", run_config_to_json(config) + "\n");
  json flags{{"config", a.config},   {"preset", a.preset}, {"prompt", config.guidance.prompt},
             {"out_dir", a.out_dir}, {"seed", config.seed}, {"guidance", config.guidance.kind},
             {"resume", a.resume},   {"stop_at", a.stop_at}};
  write_manifest(out / "run_manifest.json", "optimize", flags);

  const auto t0 = std::chrono::steady_clock::now();
  const int64_t stop = a.stop_at >= 0 ? a.stop_at : config.schedule.total_iters;
  trainer.run(state, stop, out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  size_t skipped = 0;
  for (const auto& r : trainer.log()) skipped += r.skipped ? 1 : 0;
  std::printf("optimize: reached iteration %lld in %.1f s (%zu steps, %zu skipped); outputs in %s\n",
              static_cast<long long>(state.iteration), secs, trainer.log().size(), skipped, out.string().c_str());
  return kExitOk;
}

struct RenderArgs {
  std::string checkpoint, config, model, decoder, psi_file, phi_file, out = "render.png";
  double azimuth = 0.0, elevation = 0.0;
  bool textureless = false;
};

int cmd_render(const RenderArgs& a) {
  const ViewSetup v = view_setup(a.config, a.model, a.decoder);
  const TrainState st = load_checkpoint(a.checkpoint);
  check_state_matches(v.assets.model, st.avatar);
  const ArticulationPose pose = pose_from_json(v.assets.model, a.psi_file.empty() ? "" : read_text(a.psi_file),
                                               a.phi_file.empty() ? "" : read_text(a.phi_file));
  const Tensor rgb = render_view_rgb(v.assets, v.config, st.avatar, pose, a.azimuth, a.elevation, a.textureless);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_png(out, rgb);
  json flags{{"checkpoint", a.checkpoint}, {"config", a.config},       {"model", a.model},
             {"decoder", a.decoder},       {"azimuth", a.azimuth},     {"elevation", a.elevation},
             {"psi_file", a.psi_file},     {"phi_file", a.phi_file},   {"textureless", a.textureless},
             {"out", a.out}};
  fs::path manifest = out;
  manifest.replace_extension(".manifest.json");
  write_manifest(manifest, "render", flags);
  std::printf("render: wrote %s (%lldx%lld)\n", out.string().c_str(), static_cast<long long>(rgb.dim(2)),
              static_cast<long long>(rgb.dim(1)));
  return kExitOk;
}

struct AnimateArgs {
  std::string checkpoint, config, model, decoder, pose_dataset, out_dir = "frames";
  int64_t frames = 0;
  double azimuth = 0.0;
};

int cmd_animate(const AnimateArgs& a) {
  const ViewSetup v = view_setup(a.config, a.model, a.decoder);
  const TrainState st = load_checkpoint(a.checkpoint);
  check_state_matches(v.assets.model, st.avatar);
  const PoseDataset ds = load_pose_dataset(a.pose_dataset);
  ds.validate(v.assets.model);
  const size_t n = a.frames > 0 ? std::min(ds.records.size(), static_cast<size_t>(a.frames)) : ds.records.size();
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const int width = std::max(4, static_cast<int>(std::to_string(n).size()));
  for (size_t i = 0; i < n; ++i) {
    const Tensor rgb = render_view_rgb(v.assets, v.config, st.avatar, ds.pose(i), a.azimuth, 0.0, false);
    std::string name = std::to_string(i);
    name.insert(0, static_cast<size_t>(width) - std::min<size_t>(width, name.size()), '0');
    write_png(out / (name + ".png"), rgb);
  }
  json flags{{"checkpoint", a.checkpoint}, {"config", a.config},     {"model", a.model},
             {"decoder", a.decoder},       {"pose_dataset", a.pose_dataset}, {"frames", a.frames},
             {"azimuth", a.azimuth},       {"out_dir", a.out_dir}};
  write_manifest(out / "run_manifest.json", "animate", flags);
  std::printf("animate: wrote %zu frames to %s\n", n, out.string().c_str());
  return kExitOk;
}

int cmd_gradcheck(const std::string& suite, uint64_t seed) {
  const auto results = run_gradcheck_suite(suite, seed);
  bool ok = true;
  double total = 0.0;
  for (const auto& r : results) {
    std::printf("[%s] %s (%.2f s)\n", r.passed() ? "PASS" : "FAIL", r.suite.c_str(), r.seconds);
    for (const auto& rep : r.reports) {
      if (!rep.passed()) std::printf("  %s\n", rep.summary().c_str());
    }
    ok = ok && r.passed();
    total += r.seconds;
  }
  std::printf("gradcheck: %s in %.2f s\n", ok ? "all suites passed" : "FAILURES", total);
  return ok ? kExitOk : kExitFailure;
}

struct ExportArgs {
  std::string checkpoint, model, psi, phi, format = "obj", out = "mesh.obj";
};

int cmd_export_mesh(const ExportArgs& a) {
  if (a.format != "obj") throw ConfigError("unsupported mesh format '" + a.format + "' (only obj)");
  RunConfig c;
  c.model_path = a.model;
  const HeadModel model = c.model_path.empty() ? make_desk_model() : load_model(c.model_path);
  const TrainState st = load_checkpoint(a.checkpoint);
  check_state_matches(model, st.avatar);
  const ArticulationPose pose = pose_from_json(model, a.psi, a.phi);
  const PoseEvaluation eval = posed_vertices(model, st.avatar, pose);
  write_text(a.out, mesh_to_obj(eval.posed, model.faces, model.uv));
  fs::path manifest(a.out);
  manifest.replace_extension(".manifest.json");
  write_manifest(manifest, "export-mesh",
                 json{{"checkpoint", a.checkpoint}, {"model", a.model}, {"psi", a.psi}, {"phi", a.phi},
                      {"format", a.format}, {"out", a.out}});
  std::printf("export-mesh: wrote %s (%zu vertices, %zu faces)\n", a.out.c_str(), eval.posed.size(),
              model.faces.size());
  return kExitOk;
}

int cmd_make_desk_assets(const std::string& out_dir, int64_t poses, uint64_t seed) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const HeadModel model = make_desk_model();
  save_model(out / "desk_model.hdm", model);
  write_text(out / "poses.jsonl", pose_dataset_to_jsonl(make_desk_pose_dataset(model, static_cast<size_t>(poses), seed)));
  write_text(out / "decoder.json", decoder_to_json(default_decoder()) + "\n");
  RunConfig c = desk_preset();
  c.seed = seed;
  c.model_path = (out / "desk_model.hdm").string();
  c.pose_dataset_path = (out / "poses.jsonl").string();
  c.decoder_path = (out / "decoder.json").string();
  write_text(out / "desk_config.json", run_config_to_json(c) + "\n");
  write_manifest(out / "run_manifest.json", "make-desk-assets",
                 json{{"out_dir", out_dir}, {"poses", poses}, {"seed", seed}});
  std::printf("make-desk-assets: model (%zu vertices), %lld poses, decoder and config in %s\n",
              model.num_vertices(), static_cast<long long>(poses), out.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualhead: articulated 3D head optimisation engine"};
  app.require_subcommand(1, 1);

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Run the texture/geometry optimisation schedule");
  optimize->add_option("--config", opt.config, "Run configuration JSON (default: the preset)");
  optimize->add_option("--preset", opt.preset, "Preset used without --config: desk or full")->capture_default_str();
  optimize->add_option("--prompt", opt.prompt, "Text prompt sent to the guidance backend");
  optimize->add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
  optimize->add_option("--seed", opt.seed, "Random seed (overrides the config)");
  optimize->add_option("--guidance", opt.guidance, "Guidance backend")
      ->check(CLI::IsMember({"analytic", "mock", "remote"}));
  optimize->add_option("--resume", opt.resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
  optimize->add_option("--stop-at", opt.stop_at, "Stop at this iteration instead of the schedule end");

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render a checkpoint to PNG");
  render->add_option("--checkpoint", ren.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  render->add_option("--config", ren.config, "Run configuration for render settings (default: desk preset)");
  render->add_option("--model", ren.model, "Head model file (default: built-in desk model)");
  render->add_option("--decoder", ren.decoder, "Decoder JSON (default: built-in decoder)");
  render->add_option("--azimuth", ren.azimuth, "Camera azimuth in degrees")->capture_default_str();
  render->add_option("--elevation", ren.elevation, "Camera elevation in degrees")->capture_default_str();
  render->add_option("--psi-file", ren.psi_file, "JSON array of expression coefficients")->check(CLI::ExistingFile);
  render->add_option("--phi-file", ren.phi_file, "JSON array of per-joint [x,y,z] rotations")
      ->check(CLI::ExistingFile);
  render->add_flag("--textureless", ren.textureless, "Write the Lambertian shading render instead");
  render->add_option("--out", ren.out, "Output PNG")->capture_default_str();

  AnimateArgs ani;
  auto* animate = app.add_subcommand("animate", "Render one frame per pose record");
  animate->add_option("--checkpoint", ani.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  animate->add_option("--pose-dataset", ani.pose_dataset, "Pose dataset (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  animate->add_option("--frames", ani.frames, "Maximum number of frames (0: all records)")->capture_default_str();
  animate->add_option("--out-dir", ani.out_dir, "Output directory")->capture_default_str();
  animate->add_option("--azimuth", ani.azimuth, "Camera azimuth in degrees")->capture_default_str();
  animate->add_option("--config", ani.config, "Run configuration for render settings (default: desk preset)");
  animate->add_option("--model", ani.model, "Head model file (default: built-in desk model)");
  animate->add_option("--decoder", ani.decoder, "Decoder JSON (default: built-in decoder)");

  std::string suite = "all";
  uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Run finite-difference gradient suites");
  std::vector<std::string> suites = gradcheck_suite_names();
  suites.push_back("all");
  gradcheck->add_option("--suite", suite, "Suite to run")->check(CLI::IsMember(suites))->capture_default_str();
  gradcheck->add_option("--seed", gc_seed, "Seed for the random instances")->capture_default_str();

  ExportArgs exp;
  auto* export_mesh = app.add_subcommand("export-mesh", "Write the posed mesh of a checkpoint");
  export_mesh->add_option("--checkpoint", exp.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  export_mesh->add_option("--model", exp.model, "Head model file (default: built-in desk model)");
  export_mesh->add_option("--psi", exp.psi, "JSON array of expression coefficients");
  export_mesh->add_option("--phi", exp.phi, "JSON array of per-joint [x,y,z] rotations");
  export_mesh->add_option("--format", exp.format, "Mesh format")->check(CLI::IsMember({"obj"}))->capture_default_str();
  export_mesh->add_option("--out", exp.out, "Output file")->capture_default_str();

  std::string assets_dir = "desk_assets";
  int64_t pose_count = 64;
  uint64_t assets_seed = 0;
  auto* make_assets = app.add_subcommand("make-desk-assets", "Write the synthetic desk model, poses and decoder");
  make_assets->add_option("--out-dir", assets_dir, "Output directory")->capture_default_str();
  make_assets->add_option("--poses", pose_count, "Number of pose records")->check(CLI::PositiveNumber)->capture_default_str();
  make_assets->add_option("--seed", assets_seed, "Seed for the pose dataset")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*optimize) return cmd_optimize(opt);
    if (*render) return cmd_render(ren);
    if (*animate) return cmd_animate(ani);
    if (*gradcheck) return cmd_gradcheck(suite, gc_seed);
    if (*export_mesh) return cmd_export_mesh(exp);
    if (*make_assets) return cmd_make_desk_assets(assets_dir, pose_count, assets_seed);
  } catch (const GuidanceError& e) {
    std::fprintf(stderr, "guidance error: %s\n", e.what());
    return kExitGuidance;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
