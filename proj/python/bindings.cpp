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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "dualhead/checkpoint.hpp"
#include "dualhead/config.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/gradcheck_suites.hpp"
#include "dualhead/guidance.hpp"
#include "dualhead/image_io.hpp"
#include "dualhead/model_io.hpp"
#include "dualhead/session.hpp"
#include "dualhead/trainloop.hpp"

namespace py = pybind11;
using namespace dualhead;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::memcpy(out.mutable_data(), t.data(), t.size() * sizeof(float));
  return out;
}

Tensor from_numpy(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> vec3_array(const std::vector<Vec3>& v) {
  py::array_t<float> out({static_cast<py::ssize_t>(v.size()), py::ssize_t{3}});
  auto m = out.mutable_unchecked<2>();
  for (size_t i = 0; i < v.size(); ++i) {
    m(i, 0) = v[i].x;
    m(i, 1) = v[i].y;
    m(i, 2) = v[i].z;
  }
  return out;
}

void check_state_matches(const HeadModel& model, const AvatarState& s) {
  if (s.beta.size() != static_cast<size_t>(model.num_shape) ||
      s.features.dim(0) != static_cast<int64_t>(model.num_vertices())) {
    throw ConfigError("checkpoint does not match the model (" + std::to_string(s.features.dim(0)) +
                      " vertices, " + std::to_string(s.beta.size()) + " shape coefficients)");
  }
}

RunConfig parse_config(const std::string& config_json) {
  RunConfig c = config_json.empty() ? desk_preset() : run_config_from_json(config_json);
  c.validate();
  return c;
}

py::dict optimize(const std::string& config_json, const std::filesystem::path& out_dir, int64_t stop_at,
                  const std::string& resume) {
  const RunConfig config = parse_config(config_json);
  const RunAssets assets = load_run_assets(config);
  if (config.guidance.kind == "remote" || config.segment.kind == "remote") {
    WireClient(guidance_endpoint(config.guidance)).get("/v1/health");
  }
  const auto masks = make_mask_source(config, assets);
  AnalyticTargetProvider placeholder(Tensor({1, 1, 1}));
  const TrainState fresh =
      Trainer(assets.model, config, placeholder, *masks, assets.poses, assets.decoder).initial_state();
  const auto guidance = make_guidance(config, assets, fresh.avatar);
  Trainer trainer(assets.model, config, *guidance, *masks, assets.poses, assets.decoder);
  TrainState state = fresh;
  if (!resume.empty()) {
    state = load_checkpoint(resume);
    check_state_matches(assets.model, state.avatar);
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  {
    py::gil_scoped_release release;
    trainer.run(state, stop_at >= 0 ? stop_at : config.schedule.total_iters, out_dir);
  }
  size_t skipped = 0;
  for (const auto& r : trainer.log()) skipped += r.skipped ? 1 : 0;
  py::list events;
  for (const auto& e : trainer.events()) {
    events.append(py::dict(py::arg("iteration") = e.iteration, py::arg("kind") = e.kind,
                           py::arg("detail") = e.detail));
  }
  py::dict out;
  out["iteration"] = state.iteration;
  out["steps"] = trainer.log().size();
  out["skipped"] = skipped;
  out["geometry_hash"] = geometry_hash(state.avatar);
  out["events"] = events;
  return out;
}

py::array_t<float> render(const std::filesystem::path& checkpoint, const std::string& config_json, double azimuth,
                          double elevation, bool textureless) {
  const RunConfig config = parse_config(config_json);
  const RunAssets assets = load_run_assets(config);
  const TrainState st = load_checkpoint(checkpoint);
  check_state_matches(assets.model, st.avatar);
  Tensor rgb;
  {
    py::gil_scoped_release release;
    rgb = render_view_rgb(assets, config, st.avatar, ArticulationPose::neutral(assets.model), azimuth, elevation,
                          textureless);
  }
  return to_numpy(rgb);
}

}  // namespace

PYBIND11_MODULE(_dualhead, m) {
  m.doc() = "Articulated 3D head optimisation engine";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<MeshError>(m, "MeshError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<GuidanceError>(m, "GuidanceError", error.ptr());

  py::class_<HeadModel>(m, "HeadModel")
      .def_property_readonly("num_vertices", &HeadModel::num_vertices)
      .def_property_readonly("num_faces", [](const HeadModel& h) { return h.faces.size(); })
      .def_property_readonly("num_joints", &HeadModel::num_joints)
      .def_readonly("num_shape", &HeadModel::num_shape)
      .def_readonly("num_expression", &HeadModel::num_expression)
      .def_property_readonly("template_vertices", [](const HeadModel& h) { return vec3_array(h.template_vertices); })
      .def_property_readonly("faces",
                             [](const HeadModel& h) {
                               py::array_t<int32_t> out({static_cast<py::ssize_t>(h.faces.size()), py::ssize_t{3}});
                               auto f = out.mutable_unchecked<2>();
                               for (size_t i = 0; i < h.faces.size(); ++i)
                                 for (int k = 0; k < 3; ++k) f(i, k) = h.faces[i][k];
                               return out;
                             })
      .def("validate", &HeadModel::validate);

  m.def("desk_model", [] { return make_desk_model(); }, "The small built-in head model.");
  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_model", &save_model, py::arg("path"), py::arg("model"));

  m.def("desk_config", [] { return run_config_to_json(desk_preset()); }, "Desk preset as JSON text.");
  m.def("default_config", [] { return run_config_to_json(RunConfig{}); }, "Full-scale defaults as JSON text.");
  m.def("normalize_config", [](const std::string& text) { return run_config_to_json(parse_config(text)); },
        py::arg("config_json"), "Parses, validates and re-serialises a config.");

  py::class_<TrainState>(m, "Checkpoint")
      .def_readonly("iteration", &TrainState::iteration)
      .def_readonly("seed", &TrainState::seed)
      .def_property_readonly("beta", [](const TrainState& s) { return s.avatar.beta; })
      .def_property_readonly("texture", [](const TrainState& s) { return to_numpy(s.avatar.texture); })
      .def_property_readonly("features", [](const TrainState& s) { return to_numpy(s.avatar.features); })
      .def_property_readonly("geometry_hash", [](const TrainState& s) { return geometry_hash(s.avatar); })
      .def("save", [](const TrainState& s, const std::filesystem::path& p) { save_checkpoint(p, s); });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def("optimize", &optimize, py::arg("config_json") = "", py::arg("out_dir") = std::filesystem::path{},
        py::arg("stop_at") = -1, py::arg("resume") = "",
        "Runs the optimisation; an empty config uses the desk preset. Returns a summary dict.");
  m.def("render", &render, py::arg("checkpoint"), py::arg("config_json") = "", py::arg("azimuth") = 0.0,
        py::arg("elevation") = 0.0, py::arg("textureless") = false, "RGB image [3, H, W] in [0, 1].");

  m.def(
      "sds_grad",
      [](const FloatArray& noise_pred, const FloatArray& eps, float w) {
        return to_numpy(sds_grad_formula(from_numpy(noise_pred), from_numpy(eps), w));
      },
      py::arg("noise_pred"), py::arg("eps"), py::arg("w"));

  m.def(
      "gradcheck",
      [](const std::string& suite, uint64_t seed) {
        std::vector<SuiteResult> results;
        {
          py::gil_scoped_release release;
          results = run_gradcheck_suite(suite, seed);
        }
        py::list out;
        for (const auto& r : results) {
          double worst = 0.0;
          for (const auto& rep : r.reports) worst = std::max(worst, rep.max_rel_error);
          out.append(py::dict(py::arg("suite") = r.suite, py::arg("passed") = r.passed(),
                              py::arg("reports") = r.reports.size(), py::arg("max_rel_error") = worst,
                              py::arg("seconds") = r.seconds));
        }
        return out;
      },
      py::arg("suite") = "all", py::arg("seed") = 0);
  m.def("gradcheck_suites", &gradcheck_suite_names);

  m.def(
      "write_png",
      [](const std::filesystem::path& path, const FloatArray& image) { write_png(path, from_numpy(image)); },
      py::arg("path"), py::arg("image"), "Writes a [C, H, W] image in [0, 1] (C = 1 or 3).");
}
