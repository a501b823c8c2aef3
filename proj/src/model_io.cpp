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

#include "dualhead/model_io.hpp"

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

std::vector<float> flatten(const std::vector<Vec3>& v) {
  std::vector<float> out;
  out.reserve(v.size() * 3);
  for (const auto& p : v) {
    out.push_back(p.x);
    out.push_back(p.y);
    out.push_back(p.z);
  }
  return out;
}

std::vector<Vec3> unflatten(const std::vector<float>& f) {
  std::vector<Vec3> out(f.size() / 3);
  for (size_t i = 0; i < out.size(); ++i) out[i] = {f[i * 3], f[i * 3 + 1], f[i * 3 + 2]};
  return out;
}

void expect(const ChunkArchive& ar, const std::string& name, const Shape& shape) {
  if (ar.get(name).shape != shape) {
    throw IoError("model chunk '" + name + "' has shape " + shape_to_string(ar.get(name).shape) +
                  ", expected " + shape_to_string(shape));
  }
}

std::vector<Face> faces_from(const std::vector<int32_t>& flat) {
  std::vector<Face> faces(flat.size() / 3);
  for (size_t i = 0; i < faces.size(); ++i) faces[i] = {flat[i * 3], flat[i * 3 + 1], flat[i * 3 + 2]};
  return faces;
}

}  // namespace

ChunkArchive model_to_archive(const HeadModel& m) {
  const auto v = static_cast<int64_t>(m.num_vertices());
  const auto j = static_cast<int64_t>(m.num_joints());
  ChunkArchive ar;
  ar.put_f32("template_vertices", {v, 3}, flatten(m.template_vertices));
  std::vector<int32_t> faces;
  for (const auto& f : m.faces) faces.insert(faces.end(), f.begin(), f.end());
  ar.put_i32("faces", {static_cast<int64_t>(m.faces.size()), 3}, faces);
  ar.put_f32("shape_basis", {v, 3, m.num_shape}, m.shape_basis);
  ar.put_f32("expression_basis", {v, 3, m.num_expression}, m.expression_basis);
  ar.put_f32("pose_basis", {v, 3, m.num_pose_corrective()}, m.pose_basis);
  ar.put_f32("joint_positions", {j, 3}, flatten(m.joint_positions));
  ar.put_i32("joint_parents", {j}, m.joint_parents);
  ar.put_f32("skinning_weights", {v, j}, m.skinning_weights);
  std::vector<float> uv;
  for (const auto& t : m.uv) uv.insert(uv.end(), t.begin(), t.end());
  ar.put_f32("uv_coords", {v, 2}, uv);
  std::vector<uint8_t> labels;
  for (Region r : m.regions) labels.push_back(static_cast<uint8_t>(r));
  ar.put_u8("region_labels", {v}, labels);
  return ar;
}

HeadModel model_from_archive(const ChunkArchive& ar) {
  HeadModel m;
  const auto& tv = ar.get("template_vertices");
  if (tv.shape.size() != 2 || tv.shape[1] != 3) throw IoError("template_vertices must be [V,3]");
  const int64_t v = tv.shape[0];
  m.template_vertices = unflatten(ar.get_f32("template_vertices"));

  const auto& fc = ar.get("faces");
  if (fc.shape.size() != 2 || fc.shape[1] != 3) throw IoError("faces must be [F,3]");
  m.faces = faces_from(ar.get_i32("faces"));

  const auto& sb = ar.get("shape_basis");
  const auto& eb = ar.get("expression_basis");
  if (sb.shape.size() != 3 || eb.shape.size() != 3) throw IoError("bases must be rank 3");
  m.num_shape = static_cast<int>(sb.shape[2]);
  m.num_expression = static_cast<int>(eb.shape[2]);
  expect(ar, "shape_basis", {v, 3, m.num_shape});
  expect(ar, "expression_basis", {v, 3, m.num_expression});
  m.shape_basis = ar.get_f32("shape_basis");
  m.expression_basis = ar.get_f32("expression_basis");

  const auto& jp = ar.get("joint_positions");
  if (jp.shape.size() != 2 || jp.shape[1] != 3) throw IoError("joint_positions must be [J,3]");
  const int64_t j = jp.shape[0];
  m.joint_positions = unflatten(ar.get_f32("joint_positions"));
  expect(ar, "joint_parents", {j});
  m.joint_parents = ar.get_i32("joint_parents");
  expect(ar, "pose_basis", {v, 3, 9 * (j - 1)});
  m.pose_basis = ar.get_f32("pose_basis");
  expect(ar, "skinning_weights", {v, j});
  m.skinning_weights = ar.get_f32("skinning_weights");
  expect(ar, "uv_coords", {v, 2});
  const auto uv = ar.get_f32("uv_coords");
  m.uv.resize(static_cast<size_t>(v));
  for (size_t i = 0; i < m.uv.size(); ++i) m.uv[i] = {uv[i * 2], uv[i * 2 + 1]};
  expect(ar, "region_labels", {v});
  for (uint8_t r : ar.get_u8("region_labels")) {
    if (r > 3) throw IoError("unknown region label " + std::to_string(r));
    m.regions.push_back(static_cast<Region>(r));
  }

  std::vector<uint8_t> keep;
  std::vector<Face> extra;
  if (ar.has("face_keep_mask")) keep = ar.get_u8("face_keep_mask");
  if (ar.has("extra_faces")) extra = faces_from(ar.get_i32("extra_faces"));
  apply_face_edits(m, keep, extra);
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const HeadModel& model) {
  model_to_archive(model).write(path, "HDM1");
}

HeadModel load_model(const std::filesystem::path& path) {
  return model_from_archive(ChunkArchive::read(path, "HDM1"));
}

}  // namespace dualhead
