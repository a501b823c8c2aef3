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

#include "dualhead/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "dualhead/chunk_io.hpp"
#include "dualhead/errors.hpp"
#include "json.hpp"

namespace dualhead {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + path_ + k + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path_ + key + "': " + e.what());
    }
  }
  void get(const char* key, Vec3& out) {
    std::array<float, 3> a{out.x, out.y, out.z};
    get(key, a);
    out = {a[0], a[1], a[2]};
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  Section sub(const char* key) { return Section(j_.at(key), path_ + key + "."); }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::validate() const {
  schedule.validate();
  alpha.validate();
  weights.validate();
  require(lr_texture >= 0.0f && lr_geometry >= 0.0f, "learning rates must be non-negative");
  require(adam.beta1 >= 0.0f && adam.beta1 < 1.0f && adam.beta2 >= 0.0f && adam.beta2 < 1.0f &&
              adam.eps > 0.0f,
          "Adam betas must be in [0,1) and eps positive");
  require(render.feature_resolution >= 1 && render.hi_resolution >= render.feature_resolution,
          "render resolutions must satisfy 1 <= feature <= hi");
  require(render.fov_deg > 0.0f && render.fov_deg < 180.0f, "field of view must be in (0,180)");
  require(render.near > 0.0f && render.far > render.near, "clip planes must satisfy 0 < near < far");
  RasterSettings soft = render.soft;
  soft.mode = RasterMode::kSoft;
  soft.validate();
  require(background.fixed_color.size() == kTextureChannels,
          "background fixed_color needs one value per texture channel");
  require(background.lo <= background.hi, "background colour range is empty");
  require(init.feature_dim >= 1 && init.texture_size >= 1, "feature_dim and texture_size must be positive");
  require(init.feature_sigma >= 0.0f, "feature_sigma must be non-negative");
  require(init.enlarge_iterations >= 0, "enlarge_iterations must be non-negative");
  require(guidance.kind == "analytic" || guidance.kind == "mock" || guidance.kind == "remote",
          "guidance.kind must be analytic, mock or remote");
  require(guidance.cfg_scale > 0.0f, "cfg_scale must be positive");
  require(guidance.t_min >= 0.0f && guidance.t_min <= guidance.t_max && guidance.t_max <= 1.0f,
          "timestep range must satisfy 0 <= t_min <= t_max <= 1");
  require(guidance.retries >= 0 && guidance.timeout_s > 0.0, "guidance retries/timeout invalid");
  require(segment.kind == "builtin" || segment.kind == "remote", "segment.kind must be builtin or remote");
  segment.lut.validate();
  require(segment.lut.azimuth_min <= schedule.azimuth_min && segment.lut.azimuth_max >= schedule.azimuth_max,
          "mask LUT must cover the sampled azimuth range");
  require(checkpoint_every >= 0 && preview_every >= 0, "checkpoint/preview intervals must be >= 0");
}

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Section root(j, "");
    root.get("seed", c.seed);
    root.get("lr_texture", c.lr_texture);
    root.get("lr_geometry", c.lr_geometry);
    root.get("checkpoint_every", c.checkpoint_every);
    root.get("preview_every", c.preview_every);
    root.get("model_path", c.model_path);
    root.get("pose_dataset_path", c.pose_dataset_path);
    root.get("decoder_path", c.decoder_path);
    if (root.has("schedule")) {
      Section s = root.sub("schedule");
      s.get("total_iters", c.schedule.total_iters);
      s.get("initial_texture_iters", c.schedule.initial_texture_iters);
      s.get("dual_block", c.schedule.dual_block);
      s.get("texture_block", c.schedule.texture_block);
      s.get("lut_refresh", c.schedule.lut_refresh);
      s.get("azimuth_min", c.schedule.azimuth_min);
      s.get("azimuth_max", c.schedule.azimuth_max);
      s.get("elevation", c.schedule.elevation);
      s.get("camera_radius", c.schedule.camera_radius);
    }
    if (root.has("alpha")) {
      Section s = root.sub("alpha");
      s.get("ramp_iters", c.alpha.ramp_iters);
      s.get("post_min", c.alpha.post_min);
      s.get("post_max", c.alpha.post_max);
    }
    if (root.has("weights")) {
      Section s = root.sub("weights");
      s.get("lambda1", c.weights.lambda1);
      s.get("lambda2", c.weights.lambda2);
      s.get("lambda3", c.weights.lambda3);
      s.get("seg_lambda", c.weights.seg_lambda);
      if (s.has("region_scale")) {
        Section r = s.sub("region_scale");
        for (int i = 0; i < 4; ++i) r.get(region_name(static_cast<Region>(i)), c.weights.region_scale[i]);
      }
    }
    if (root.has("adam")) {
      Section s = root.sub("adam");
      s.get("beta1", c.adam.beta1);
      s.get("beta2", c.adam.beta2);
      s.get("eps", c.adam.eps);
    }
    if (root.has("render")) {
      Section s = root.sub("render");
      s.get("feature_resolution", c.render.feature_resolution);
      s.get("hi_resolution", c.render.hi_resolution);
      s.get("fov_deg", c.render.fov_deg);
      s.get("near", c.render.near);
      s.get("far", c.render.far);
      s.get("light_dir", c.render.light_dir);
      c.render.soft.width = c.render.soft.height = c.render.feature_resolution;
      if (s.has("soft")) {
        Section r = s.sub("soft");
        r.get("sigma", c.render.soft.sigma);
        r.get("gamma", c.render.soft.gamma);
        r.get("faces_per_pixel", c.render.soft.faces_per_pixel);
        r.get("resolution", c.render.soft.width);
        r.get("min_influence", c.render.soft.min_influence);
        c.render.soft.height = c.render.soft.width;
      }
    }
    if (root.has("background")) {
      Section s = root.sub("background");
      s.get("randomize", c.background.randomize);
      s.get("lo", c.background.lo);
      s.get("hi", c.background.hi);
      s.get("fixed_color", c.background.fixed_color);
    }
    if (root.has("init")) {
      Section s = root.sub("init");
      s.get("feature_dim", c.init.feature_dim);
      s.get("texture_size", c.init.texture_size);
      s.get("feature_sigma", c.init.feature_sigma);
      s.get("enlarge_strength", c.init.enlarge_strength);
      s.get("enlarge_iterations", c.init.enlarge_iterations);
    }
    if (root.has("guidance")) {
      Section s = root.sub("guidance");
      s.get("kind", c.guidance.kind);
      s.get("prompt", c.guidance.prompt);
      s.get("prompt_prefix", c.guidance.prompt_prefix);
      s.get("t_min", c.guidance.t_min);
      s.get("t_max", c.guidance.t_max);
      s.get("cfg_scale", c.guidance.cfg_scale);
      s.get("endpoint", c.guidance.endpoint);
      s.get("timeout_s", c.guidance.timeout_s);
      s.get("retries", c.guidance.retries);
      s.get("mock_max_norm", c.guidance.mock_max_norm);
      s.get("target_path", c.guidance.target_path);
      s.get("target_texture_path", c.guidance.target_texture_path);
    }
    if (root.has("segment")) {
      Section s = root.sub("segment");
      s.get("kind", c.segment.kind);
      s.get("threshold", c.segment.threshold);
      s.get("azimuth_min", c.segment.lut.azimuth_min);
      s.get("azimuth_max", c.segment.lut.azimuth_max);
      s.get("step", c.segment.lut.step);
      s.get("resolution", c.segment.lut.resolution);
    }
  }
  c.validate();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json region;
  for (int i = 0; i < 4; ++i) region[region_name(static_cast<Region>(i))] = c.weights.region_scale[i];
  const json j = {
      {"seed", c.seed},
      {"lr_texture", c.lr_texture},
      {"lr_geometry", c.lr_geometry},
      {"checkpoint_every", c.checkpoint_every},
      {"preview_every", c.preview_every},
      {"model_path", c.model_path},
      {"pose_dataset_path", c.pose_dataset_path},
      {"decoder_path", c.decoder_path},
      {"schedule",
       {{"total_iters", c.schedule.total_iters},
        {"initial_texture_iters", c.schedule.initial_texture_iters},
        {"dual_block", c.schedule.dual_block},
        {"texture_block", c.schedule.texture_block},
        {"lut_refresh", c.schedule.lut_refresh},
        {"azimuth_min", c.schedule.azimuth_min},
        {"azimuth_max", c.schedule.azimuth_max},
        {"elevation", c.schedule.elevation},
        {"camera_radius", c.schedule.camera_radius}}},
      {"alpha",
       {{"ramp_iters", c.alpha.ramp_iters}, {"post_min", c.alpha.post_min}, {"post_max", c.alpha.post_max}}},
      {"weights",
       {{"lambda1", c.weights.lambda1},
        {"lambda2", c.weights.lambda2},
        {"lambda3", c.weights.lambda3},
        {"seg_lambda", c.weights.seg_lambda},
        {"region_scale", region}}},
      {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
      {"render",
       {{"feature_resolution", c.render.feature_resolution},
        {"hi_resolution", c.render.hi_resolution},
        {"fov_deg", c.render.fov_deg},
        {"near", c.render.near},
        {"far", c.render.far},
        {"light_dir", {c.render.light_dir.x, c.render.light_dir.y, c.render.light_dir.z}},
        {"soft",
         {{"sigma", c.render.soft.sigma},
          {"gamma", c.render.soft.gamma},
          {"faces_per_pixel", c.render.soft.faces_per_pixel},
          {"resolution", c.render.soft.width},
          {"min_influence", c.render.soft.min_influence}}}}},
      {"background",
       {{"randomize", c.background.randomize},
        {"lo", c.background.lo},
        {"hi", c.background.hi},
        {"fixed_color", c.background.fixed_color}}},
      {"init",
       {{"feature_dim", c.init.feature_dim},
        {"texture_size", c.init.texture_size},
        {"feature_sigma", c.init.feature_sigma},
        {"enlarge_strength", c.init.enlarge_strength},
        {"enlarge_iterations", c.init.enlarge_iterations}}},
      {"guidance",
       {{"kind", c.guidance.kind},
        {"prompt", c.guidance.prompt},
        {"prompt_prefix", c.guidance.prompt_prefix},
        {"t_min", c.guidance.t_min},
        {"t_max", c.guidance.t_max},
        {"cfg_scale", c.guidance.cfg_scale},
        {"endpoint", c.guidance.endpoint},
        {"timeout_s", c.guidance.timeout_s},
        {"retries", c.guidance.retries},
        {"mock_max_norm", c.guidance.mock_max_norm},
        {"target_path", c.guidance.target_path},
        {"target_texture_path", c.guidance.target_texture_path}}},
      {"segment",
       {{"kind", c.segment.kind},
        {"threshold", c.segment.threshold},
        {"azimuth_min", c.segment.lut.azimuth_min},
        {"azimuth_max", c.segment.lut.azimuth_max},
        {"step", c.segment.lut.step},
        {"resolution", c.segment.lut.resolution}}},
  };
  return j.dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

RunConfig desk_preset() {
  RunConfig c;
  c.schedule.total_iters = 300;
  c.schedule.initial_texture_iters = 100;
  c.schedule.dual_block = 100;
  c.schedule.texture_block = 50;
  c.schedule.lut_refresh = 50;
  c.alpha.ramp_iters = 60;
  c.render.feature_resolution = 16;
  c.render.hi_resolution = 128;
  c.render.soft.width = c.render.soft.height = 64;
  c.render.soft.sigma = 1e-4f;
  // Laplacian magnitudes grow as the mesh coarsens (|L v| ~ 1/V for the L1
  // term, squared for the prior), so both weights are scaled by the vertex
  // ratio of the desk mesh to a 16k-vertex head.
  c.weights.lambda2 = 50.0f;
  c.weights.lambda3 = 0.5f;
  c.lr_geometry = 1e-3f;
  c.init.texture_size = 64;
  c.init.enlarge_iterations = 3;
  c.segment.lut.resolution = 128;
  c.checkpoint_every = 100;
  return c;
}

void PoseDataset::validate(const HeadModel& model) const {
  if (records.empty()) throw ConfigError("pose dataset is empty");
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.psi.size() != static_cast<size_t>(model.num_expression) || r.phi.size() != model.num_joints()) {
      throw ConfigError("pose record " + std::to_string(i) + " does not match the model's expression/joint counts");
    }
    for (float v : r.psi) require(std::isfinite(v), "pose record " + std::to_string(i) + " is not finite");
    for (const auto& p : r.phi) {
      require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
              "pose record " + std::to_string(i) + " is not finite");
    }
  }
}

PoseDataset pose_dataset_from_jsonl(std::string_view text, std::string source) {
  PoseDataset ds;
  ds.source = std::move(source);
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      PoseRecord r;
      r.psi = j.at("psi").get<std::vector<float>>();
      const auto phi = j.at("phi").get<std::vector<float>>();
      if (phi.size() % 3 != 0) throw ConfigError("phi length must be a multiple of 3");
      for (size_t k = 0; k < phi.size(); k += 3) r.phi.push_back({phi[k], phi[k + 1], phi[k + 2]});
      ds.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ConfigError("pose dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("pose dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

std::string pose_dataset_to_jsonl(const PoseDataset& ds) {
  std::string out;
  for (const auto& r : ds.records) {
    std::vector<float> phi;
    for (const auto& p : r.phi) phi.insert(phi.end(), {p.x, p.y, p.z});
    out += json{{"psi", r.psi}, {"phi", phi}}.dump();
    out += '\n';
  }
  return out;
}

PoseDataset load_pose_dataset(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return pose_dataset_from_jsonl(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                 path.string());
}

PoseDataset make_desk_pose_dataset(const HeadModel& model, size_t count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> expr(-1.0f, 1.0f);
  std::uniform_real_distribution<float> angle(-0.15f, 0.15f);
  PoseDataset ds;
  ds.source = "desk:" + std::to_string(seed);
  for (size_t i = 0; i < count; ++i) {
    PoseRecord r;
    for (int k = 0; k < model.num_expression; ++k) r.psi.push_back(expr(rng));
    for (size_t j = 0; j < model.num_joints(); ++j) {
      // Jaw opens about x only; other joints get small free rotations.
      if (j > 0) {
        r.phi.push_back({std::abs(angle(rng)), 0.0f, 0.0f});
      } else {
        const float ax = angle(rng), ay = angle(rng), az = angle(rng);
        r.phi.push_back({ax, ay, az});
      }
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace dualhead
