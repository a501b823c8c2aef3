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

#include "dualhead/trainloop.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dualhead/errors.hpp"
#include "dualhead/image_io.hpp"
#include "dualhead/resize.hpp"
#include "json.hpp"

namespace dualhead {

Camera make_camera(const RenderConfig& render, float radius, double azimuth, double elevation) {
  Camera cam;
  cam.pose.azimuth_deg = static_cast<float>(azimuth);
  cam.pose.elevation_deg = static_cast<float>(elevation);
  cam.pose.radius = radius;
  cam.fov_deg = render.fov_deg;
  cam.near = render.near;
  cam.far = render.far;
  return cam;
}

Trainer::Trainer(const HeadModel& model, RunConfig config, const GuidanceProvider& guidance,
                 const MaskReferenceSource& masks, PoseDataset poses, LinearDecoder decoder)
    : model_(model),
      config_(std::move(config)),
      guidance_(guidance),
      masks_(masks),
      poses_(std::move(poses)),
      decoder_(decoder) {
  config_.validate();
  if (!poses_.records.empty()) poses_.validate(model_);
  geometry_ = GeometryContext::create(model_, config_.weights, config_.render.soft,
                                      make_camera(config_.render, config_.schedule.camera_radius, 0.0, 0.0));
}

TrainState Trainer::initial_state() const {
  auto rng = iteration_rng(config_.seed, -1, 1);
  TrainState s;
  s.seed = config_.seed;
  s.avatar = initialize_avatar(model_, config_.init, rng);
  return s;
}

void Trainer::emit(int64_t iteration, std::string kind, std::string detail) {
  events_.push_back({iteration, std::move(kind), std::move(detail)});
}

Tensor Trainer::render_features_at(const AvatarState& state, const ArticulationPose& pose, double azimuth,
                                   double elevation) const {
  const PoseEvaluation eval = posed_vertices(model_, state, pose);
  BackgroundSpec bg;
  bg.color_a = config_.background.fixed_color;
  const Camera cam = make_camera(config_.render, config_.schedule.camera_radius, azimuth, elevation);
  return render_hi_lo(eval.posed, model_.faces, model_.uv, state.texture, cam, config_.render.hi_resolution,
                      config_.render.feature_resolution, &bg)
      .features;
}

namespace {

void check_params(const AvatarState& s) {
  auto finite = [](std::span<const float> v) {
    for (float x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(s.beta)) throw NumericError("beta became non-finite");
  if (!finite(s.mlp.flatten())) throw NumericError("MLP parameters became non-finite");
  if (!s.features.all_finite()) throw NumericError("vertex features became non-finite");
  if (!s.texture.all_finite()) throw NumericError("texture became non-finite");
}

}  // namespace

StepLog Trainer::step(TrainState& state) {
  const Schedule& sched = config_.schedule;
  const int64_t it = state.iteration;
  StepLog rec;
  rec.iteration = it;
  rec.phase = phase_of(sched, it);
  if (it == 0 || phase_of(sched, it - 1) != rec.phase) emit(it, "phase", phase_name(rec.phase));

  auto rng = iteration_rng(state.seed, it, 0);
  const StepInputs in = sample_step_inputs(sched, poses_.records.size(), config_.background, rng);
  rec.alpha = alpha_at(config_.alpha, it, rng);
  rec.azimuth = in.azimuth;
  const bool dual = rec.phase == Phase::kDual;

  if (dual && (lut_rebuild_due(sched, it) || !state.lut)) {
    state.lut = build_mask_lut(masks_, state.avatar, config_.segment.lut, it);
    emit(it, "lut_rebuild", masks_.name());
    if (state.lut->min_neighbor_iou < 0.5) {
      emit(it, "lut_warning", "min neighbour IoU " + std::to_string(state.lut->min_neighbor_iou));
    }
  }

  // Guidance path: sampled pose, random backdrop, alpha-blended shading.
  const ArticulationPose pose =
      poses_.records.empty() ? ArticulationPose::neutral(model_) : poses_.pose(in.pose_index);
  const PoseEvaluation eval = posed_vertices(model_, state.avatar, pose);
  const Camera cam = make_camera(config_.render, sched.camera_radius, in.azimuth, in.elevation);
  const int hi = config_.render.hi_resolution, lo = config_.render.feature_resolution;
  const HiLoOutput hilo = render_hi_lo(eval.posed, model_.faces, model_.uv, state.avatar.texture, cam, hi,
                                       lo, &in.background);
  Tensor guide_input = hilo.features;
  if (rec.alpha != 1.0) {
    const Tensor shaded = render_shaded(eval.posed, model_.faces, cam, hi, hi, config_.render.light_dir);
    const Tensor shaded_lo = bilinear_resize(shaded, lo, lo);
    guide_input = blend_guidance_input(hilo.features, shaded_to_features(shaded_lo, &decoder_),
                                       static_cast<float>(rec.alpha));
  }

  GuidanceRequest req;
  req.feature_image = std::move(guide_input);
  req.prompt = make_prompt(config_.guidance.prompt_prefix, config_.guidance.prompt);
  req.t_min = config_.guidance.t_min;
  req.t_max = config_.guidance.t_max;
  req.cfg_scale = config_.guidance.cfg_scale;
  req.seed = state.seed;
  req.iteration = it;
  GuidanceResponse resp;
  try {
    resp = guidance_.compute(req);
    if (resp.grad.shape() != req.feature_image.shape()) {
      throw GuidanceError("guidance gradient has shape " + shape_to_string(resp.grad.shape()));
    }
    if (!resp.grad.all_finite()) throw GuidanceError("guidance gradient is not finite");
  } catch (const GuidanceError& e) {
    rec.skipped = true;
    emit(it, "skip", e.what());
    log_.push_back(rec);
    ++state.iteration;
    return rec;
  }
  rec.guidance_norm = std::sqrt(squared_norm(resp.grad.values()));

  Tensor tex_grad(state.avatar.texture.shape());
  accumulate_hi_lo_texture_gradient(hilo, blend_guidance_backward(resp.grad, static_cast<float>(rec.alpha)),
                                    tex_grad);
  rec.texture_sources = kGradGuidance;

  GeometryLossResult geom;
  if (dual) {
    geom = total_geometry_loss(geometry_, state.avatar, &state.lut->lookup(in.azimuth), in.azimuth);
    rec.geometry = geom.parts;
    rec.geometry_sources = geom.sources;
  }

  adam_step(state.optim.texture, state.avatar.texture.values(), tex_grad.values(), config_.lr_texture,
            config_.adam);
  if (dual) {
    const float lr = config_.lr_geometry;
    adam_step(state.optim.beta, state.avatar.beta, geom.grads.beta, lr, config_.adam);
    auto theta = state.avatar.mlp.flatten();
    adam_step(state.optim.mlp, theta, geom.grads.mlp, lr, config_.adam);
    state.avatar.mlp.assign_flat(theta);
    adam_step(state.optim.features, state.avatar.features.values(), geom.grads.features.values(), lr,
              config_.adam);
  }
  ++state.iteration;
  try {
    check_params(state.avatar);
  } catch (const NumericError& e) {
    emit(it, "abort", e.what());
    throw;
  }
  log_.push_back(rec);
  return rec;
}

void Trainer::run(TrainState& state, int64_t stop_at, const std::filesystem::path& out_dir) {
  const int64_t end = std::min(stop_at, config_.schedule.total_iters);
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir);
  auto flush_logs = [&] {
    if (!write) return;
    write_loss_csv(out_dir / "losses.csv", log_);
    write_event_log(out_dir / "events.jsonl", events_);
  };
  while (state.iteration < end) {
    try {
      step(state);
    } catch (const NumericError&) {
      if (write) save_checkpoint(out_dir / "diagnostic.ckp", state);
      flush_logs();
      throw;
    }
    const int64_t it = state.iteration;
    if (write && config_.checkpoint_every > 0 && it % config_.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%06lld.ckp", static_cast<long long>(it));
      save_checkpoint(out_dir / name, state);
      emit(it, "checkpoint", name);
    }
    if (write && config_.preview_every > 0 && it % config_.preview_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "preview_%06lld.png", static_cast<long long>(it));
      const Tensor f = render_features_at(state.avatar, ArticulationPose::neutral(model_), 0.0, 0.0);
      write_png(out_dir / name, decode_linear(decoder_, f));
    }
  }
  if (write) save_checkpoint(out_dir / "final.ckp", state);
  flush_logs();
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepLog>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,phase,alpha,azimuth,guidance_norm,seg,off,lap,prior,geometry_total,skipped\n";
  out.precision(9);
  for (const auto& r : log) {
    out << r.iteration << ',' << phase_name(r.phase) << ',' << r.alpha << ',' << r.azimuth << ','
        << r.guidance_norm << ',' << r.geometry.seg << ',' << r.geometry.off << ',' << r.geometry.lap << ','
        << r.geometry.prior << ',' << r.geometry.total << ',' << (r.skipped ? 1 : 0) << '\n';
  }
}

void write_event_log(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : events) {
    out << nlohmann::json{{"iteration", e.iteration}, {"kind", e.kind}, {"detail", e.detail}}.dump() << '\n';
  }
}

}  // namespace dualhead
