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

#include <random>

#include "doctest.h"
#include "dualhead/errors.hpp"
#include "dualhead/segmask.hpp"
#include "dualhead/trainloop.hpp"
#include "test_server.hpp"

using namespace dualhead;

namespace {

Mask from_rows(const std::vector<std::string>& rows) {
  Mask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m.data[static_cast<size_t>(y) * m.width + x] = rows[y][x] == '#';
  return m;
}

}  // namespace

TEST_CASE("connected components, largest component and hole filling") {
  const Mask m = from_rows({"##..#",
                            "#...#",
                            "..###",
                            "#...."});
  const auto comps = connected_components(m);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].count() == 3);
  CHECK(comps[1].count() == 5);
  CHECK(comps[2].count() == 1);
  CHECK(largest_component(m) == comps[1]);
  // Diagonal contact does not connect.
  CHECK(connected_components(from_rows({"#.", ".#"})).size() == 2);

  const Mask ring = from_rows({".....",
                               ".###.",
                               ".#.#.",
                               ".###.",
                               "....."});
  const Mask filled = fill_holes(ring);
  CHECK(filled.count() == 9);
  // A gap to the border is not a hole.
  const Mask open = from_rows({"###", "#..", "###"});
  CHECK(fill_holes(open) == open);
}

TEST_CASE("head mask selection uses anchors then size") {
  const Mask small = from_rows({"##..", "##..", "....", "...."});
  const Mask big = from_rows({"###.", "###.", "###.", "...."});
  const Mask off = from_rows({"....", "....", "..##", "..##"});
  const std::vector<Mask> cands{small, off, big};
  const std::vector<Pixel> anchors{{0, 0}, {1, 1}};
  CHECK(select_head_mask(cands, anchors) == big);
  const std::vector<Pixel> corner{{3, 3}};
  CHECK(select_head_mask(cands, corner) == off);
  const std::vector<Pixel> nowhere{{3, 0}};
  CHECK_THROWS_AS(select_head_mask(cands, nowhere), Error);
}

TEST_CASE("builtin segmenter thresholds the colour distance") {
  Tensor bg({3, 6, 6}, 0.0f);
  Tensor img = bg;
  for (int c = 0; c < 3; ++c)
    for (int y = 1; y < 5; ++y)
      for (int x = 1; x < 5; ++x) img.at(c, y, x) = 0.5f;
  img.at(0, 2, 2) = img.at(1, 2, 2) = img.at(2, 2, 2) = 0.0f;  // hole
  img.at(0, 0, 5) = 1.0f;                                       // speck
  const Mask m = builtin_segmenter(img, bg, 0.1f);
  CHECK(m.count() == 16);
  CHECK(m.at(2, 2) == 1);
  CHECK(m.at(5, 0) == 0);
}

TEST_CASE("centre anchors are a clipped 3x3 block") {
  const Camera cam;
  const auto a = center_anchors({0, 0, 0}, cam, 16, 16);
  CHECK(a.size() == 9);
  for (const Pixel& p : a) {
    CHECK(p[0] >= 7);
    CHECK(p[0] <= 9);
  }
  // The eye looks at the origin, so a point far to the left clips.
  CHECK(center_anchors({-0.1548f, 0, 0}, cam, 16, 16).size() < 9);
}

TEST_CASE("seg loss oracle") {
  Mask ref(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 2; ++x) ref.data[y * 4 + x] = 1;
  // Exact match at equal resolution gives zero.
  Tensor exact({4, 4});
  for (size_t i = 0; i < ref.data.size(); ++i) exact[i] = ref.data[i];
  const SegLossResult zero = seg_loss(ref, exact, 1000.0f);
  CHECK(zero.value == 0.0);
  for (float g : zero.mask_adjoint.values()) CHECK(g == 0.0f);
  // Constant 0.5 prediction: every pixel is off by 0.5.
  const SegLossResult half = seg_loss(ref, Tensor({2, 2}, 0.5f), 8.0f);
  CHECK(half.value == doctest::Approx(8.0 * 0.25));
  // Adjoint 2 lambda (M - S) / 16 = +-0.5 per fine pixel. Fine columns 0..3
  // sample coarse column 0 with weights 1, 0.75, 0.25, 0 and each coarse row
  // collects two fine rows: 2 * (-0.5 * 1 - 0.5 * 0.75 + 0.5 * 0.25) = -1.5.
  double total = 0.0;
  for (float g : half.mask_adjoint.values()) total += g;
  CHECK(total == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(half.mask_adjoint.at(0, 0) == doctest::Approx(-1.5).epsilon(1e-6));
  CHECK(half.mask_adjoint.at(0, 1) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("mask LUT build, lookup and neighbour consistency") {
  const HeadModel m = make_desk_model();
  std::mt19937_64 rng(0);
  AvatarInit init;
  init.texture_size = 8;
  const AvatarState s = initialize_avatar(m, init, rng);
  const Camera cam;
  const TargetMeshMaskSource src(m.template_vertices, m.faces, cam);
  LutSpec spec;
  spec.azimuth_min = -4;
  spec.azimuth_max = 4;
  spec.step = 2;
  spec.resolution = 32;
  const MaskLUT lut = build_mask_lut(src, s, spec, 7);
  CHECK(lut.masks.size() == 5);
  CHECK(lut.built_at_iteration == 7);
  CHECK(lut.min_neighbor_iou > 0.9);
  CHECK(lut.index_of(-4.0) == 0);
  CHECK(lut.index_of(0.9) == 2);
  CHECK(lut.index_of(1.1) == 3);
  CHECK(lut.azimuth_at(4) == 4.0);
  CHECK_THROWS_AS(lut.index_of(7.0), ConfigError);
  LutSpec bad = spec;
  bad.step = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("rendered segmentation matches the hard silhouette") {
  const HeadModel m = make_desk_model();
  std::mt19937_64 rng(1);
  AvatarInit init;
  init.texture_size = 16;
  AvatarState s = initialize_avatar(m, init, rng);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  for (float& t : s.texture.values()) t = u(rng);
  RenderConfig rc;
  const Camera cam = make_camera(rc, 0.7f, 0.0, 0.0);
  RenderSegmentSource::Options opt;
  opt.feature_resolution = 16;
  opt.hi_resolution = 128;
  const RenderSegmentSource src(m, default_decoder(), cam, opt);
  for (double az : {-20.0, 0.0, 25.0}) {
    const Mask seg = src.reference(s, az, 128);
    Camera c = cam;
    c.pose.azimuth_deg = static_cast<float>(az);
    const Mask hard = rasterize_hard(m.template_vertices, m.faces, c, 128, 128).coverage();
    CHECK(mask_iou(seg, hard) > 0.9);
  }
  CHECK_THROWS_AS(src.reference(s, 0.0, 64), ConfigError);
}

TEST_CASE("remote segmentation goes through the wire client") {
  TestServer ts;
  int requests = 0;
  Mask served;
  ts.server().Post("/v1/segment", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const SegmentRequest r = decode_segment_request(req.body);
    CHECK(r.anchors.size() == 9);
    served = builtin_segmenter(r.image, r.background, 0.3f);
    res.set_content(encode_segment_response(served), "application/json");
  });
  ts.start();
  const HeadModel m = make_desk_model();
  std::mt19937_64 rng(1);
  AvatarInit init;
  init.texture_size = 8;
  const AvatarState s = initialize_avatar(m, init, rng);
  RenderSegmentSource::Options opt;
  opt.feature_resolution = 8;
  opt.hi_resolution = 64;
  const Camera cam;
  const RenderSegmentSource remote(m, default_decoder(), cam, opt, std::make_shared<WireClient>(ts.endpoint()));
  CHECK(remote.name() == "remote-segment");
  const Mask got = remote.reference(s, 10.0, 64);
  CHECK(requests == 1);
  CHECK(got == served);
  CHECK(got.count() > 0);
}

TEST_CASE("builtin segmenter recovers a disk and nothing from pure background") {
  const int n = 64;
  const double cx = 30.5, cy = 33.0, r = 17.0;
  Tensor bg({3, n, n}, 0.2f);
  Tensor img = bg;
  Mask truth(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r * r) {
        truth.data[static_cast<size_t>(y) * n + x] = 1;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = c == 0 ? 0.9f : 0.4f;
      }
    }
  CHECK(mask_iou(builtin_segmenter(img, bg, 0.1f), truth) > 0.99);
  CHECK(builtin_segmenter(bg, bg, 0.1f).count() == 0);
  CHECK_THROWS_AS(builtin_segmenter(img, Tensor({3, n, n - 1}), 0.1f), DimensionError);
}
