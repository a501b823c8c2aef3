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

#include "dualhead/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "dualhead/errors.hpp"

namespace dualhead {
namespace {

void put_group(ChunkArchive& ar, const std::string& name, const AdamGroup& g) {
  ar.put_f32("adam." + name + ".m", {static_cast<int64_t>(g.m.size())}, g.m);
  ar.put_f32("adam." + name + ".v", {static_cast<int64_t>(g.v.size())}, g.v);
  const uint64_t step = static_cast<uint64_t>(g.step);
  ar.put_u64("adam." + name + ".step", {&step, 1});
}

AdamGroup get_group(const ChunkArchive& ar, const std::string& name) {
  AdamGroup g;
  g.m = ar.get_f32("adam." + name + ".m");
  g.v = ar.get_f32("adam." + name + ".v");
  g.step = static_cast<int64_t>(ar.get_u64("adam." + name + ".step").at(0));
  if (g.m.size() != g.v.size()) throw IoError("checkpoint Adam moments for '" + name + "' differ in size");
  return g;
}

std::vector<float> flatten(const std::vector<Vec3>& v) {
  std::vector<float> out;
  for (const auto& p : v) out.insert(out.end(), {p.x, p.y, p.z});
  return out;
}

uint64_t scalar_u64(const ChunkArchive& ar, const std::string& name) {
  const auto v = ar.get_u64(name);
  if (v.size() != 1) throw IoError("checkpoint chunk '" + name + "' must hold one value");
  return v[0];
}

template <typename T>
bool bits_equal(std::span<const T> a, std::span<const T> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

}  // namespace

ChunkArchive checkpoint_to_archive(const TrainState& s) {
  ChunkArchive ar;
  const uint64_t meta[2] = {s.seed, static_cast<uint64_t>(s.iteration)};
  ar.put_u64("seed", {&meta[0], 1});
  ar.put_u64("iteration", {&meta[1], 1});
  ar.put_f32("beta", {static_cast<int64_t>(s.avatar.beta.size())}, s.avatar.beta);
  std::vector<int32_t> widths;
  for (const auto& l : s.avatar.mlp.layers) widths.push_back(l.in);
  if (!s.avatar.mlp.layers.empty()) widths.push_back(s.avatar.mlp.layers.back().out);
  ar.put_i32("mlp.widths", {static_cast<int64_t>(widths.size())}, widths);
  ar.put_f32("mlp.output_scale", {1}, std::span<const float>(&s.avatar.mlp.output_scale, 1));
  const auto theta = s.avatar.mlp.flatten();
  ar.put_f32("mlp.params", {static_cast<int64_t>(theta.size())}, theta);
  ar.put_tensor("features", s.avatar.features);
  ar.put_tensor("texture", s.avatar.texture);
  ar.put_f32("base_offsets", {static_cast<int64_t>(s.avatar.base_offsets.size()), 3},
             flatten(s.avatar.base_offsets));
  put_group(ar, "texture", s.optim.texture);
  put_group(ar, "beta", s.optim.beta);
  put_group(ar, "mlp", s.optim.mlp);
  put_group(ar, "features", s.optim.features);
  if (s.lut) {
    const auto& l = *s.lut;
    ar.put_i32("lut.spec", {4}, std::vector<int32_t>{l.spec.azimuth_min, l.spec.azimuth_max, l.spec.step,
                                                     l.spec.resolution});
    const uint64_t built = static_cast<uint64_t>(l.built_at_iteration);
    ar.put_u64("lut.built_at", {&built, 1});
    const uint64_t iou = std::bit_cast<uint64_t>(l.min_neighbor_iou);
    ar.put_u64("lut.min_neighbor_iou", {&iou, 1});
    std::vector<uint8_t> masks;
    for (const auto& m : l.masks) masks.insert(masks.end(), m.data.begin(), m.data.end());
    ar.put_u8("lut.masks", {static_cast<int64_t>(l.masks.size()), l.spec.resolution, l.spec.resolution}, masks);
  }
  return ar;
}

TrainState checkpoint_from_archive(const ChunkArchive& ar) {
  TrainState s;
  s.seed = scalar_u64(ar, "seed");
  s.iteration = static_cast<int64_t>(scalar_u64(ar, "iteration"));
  s.avatar.beta = ar.get_f32("beta");
  const auto widths = ar.get_i32("mlp.widths");
  const auto scale = ar.get_f32("mlp.output_scale");
  if (scale.size() != 1) throw IoError("checkpoint mlp.output_scale must hold one value");
  s.avatar.mlp = make_zero_mlp(std::vector<int>(widths.begin(), widths.end()), scale[0]);
  const auto theta = ar.get_f32("mlp.params");
  if (theta.size() != s.avatar.mlp.parameter_count()) throw IoError("checkpoint MLP parameter count mismatch");
  s.avatar.mlp.assign_flat(theta);
  s.avatar.features = ar.get_tensor("features");
  s.avatar.texture = ar.get_tensor("texture");
  const auto off = ar.get_f32("base_offsets");
  for (size_t i = 0; i + 2 < off.size(); i += 3) s.avatar.base_offsets.push_back({off[i], off[i + 1], off[i + 2]});
  s.optim.texture = get_group(ar, "texture");
  s.optim.beta = get_group(ar, "beta");
  s.optim.mlp = get_group(ar, "mlp");
  s.optim.features = get_group(ar, "features");
  if (ar.has("lut.spec")) {
    MaskLUT l;
    const auto spec = ar.get_i32("lut.spec");
    if (spec.size() != 4) throw IoError("checkpoint lut.spec must hold 4 values");
    l.spec = {spec[0], spec[1], spec[2], spec[3]};
    l.spec.validate();
    l.built_at_iteration = static_cast<int64_t>(scalar_u64(ar, "lut.built_at"));
    l.min_neighbor_iou = std::bit_cast<double>(scalar_u64(ar, "lut.min_neighbor_iou"));
    const auto masks = ar.get_u8("lut.masks");
    const size_t per = static_cast<size_t>(l.spec.resolution) * l.spec.resolution;
    if (masks.size() != per * l.spec.count()) throw IoError("checkpoint LUT mask payload size mismatch");
    for (size_t i = 0; i < l.spec.count(); ++i) {
      Mask m(l.spec.resolution, l.spec.resolution);
      std::copy_n(masks.begin() + i * per, per, m.data.begin());
      l.masks.push_back(std::move(m));
    }
    s.lut = std::move(l);
  }
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  checkpoint_to_archive(state).write(path, "CKP1");
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_archive(ChunkArchive::read(path, "CKP1"));
}

bool avatar_bits_equal(const AvatarState& a, const AvatarState& b) {
  const auto ta = a.mlp.flatten(), tb = b.mlp.flatten();
  const auto oa = flatten(a.base_offsets), ob = flatten(b.base_offsets);
  return bits_equal<float>(a.beta, b.beta) && bits_equal<float>(ta, tb) &&
         a.features.shape() == b.features.shape() && bits_equal(a.features.values(), b.features.values()) &&
         a.texture.shape() == b.texture.shape() && bits_equal(a.texture.values(), b.texture.values()) &&
         bits_equal<float>(oa, ob);
}

uint64_t geometry_hash(const AvatarState& s) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::span<const float> v) {
    const auto* p = reinterpret_cast<const uint8_t*>(v.data());
    for (size_t i = 0; i < v.size_bytes(); ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  mix(s.beta);
  const auto theta = s.mlp.flatten();
  mix(theta);
  mix(s.features.values());
  return h;
}

}  // namespace dualhead
