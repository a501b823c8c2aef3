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
#include <random>

#include "doctest.h"
#include "dualhead/errors.hpp"
#include "dualhead/guidance.hpp"
#include "dualhead/wire.hpp"
#include "json.hpp"
#include "test_server.hpp"

using namespace dualhead;

namespace {

Tensor random_tensor(Shape shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = n(rng);
  return t;
}

GuidanceRequest request_for(const Tensor& f) {
  GuidanceRequest r;
  r.feature_image = f;
  r.prompt = "a face";
  r.seed = 3;
  r.iteration = 5;
  return r;
}

}  // namespace

TEST_CASE("sds gradient formula inverts exactly") {
  const Tensor eps = random_tensor({4, 3, 3}, 1);
  const Tensor g = random_tensor({4, 3, 3}, 2);
  for (float w : {0.5f, 1.0f, 2.0f, 0.125f}) {
    const Tensor zero = sds_grad_formula(eps, eps, w);
    for (float v : zero.values()) CHECK(v == 0.0f);
    Tensor out = eps;
    for (size_t i = 0; i < out.size(); ++i) out[i] = eps[i] + w * g[i];
    const Tensor back = sds_grad_formula(out, eps, w);
    for (size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back[i] - g[i]) <= 1e-6f);
  }
  CHECK_THROWS_AS(sds_grad_formula(eps, eps, 0.0f), ConfigError);
  CHECK_THROWS_AS(sds_grad_formula(eps, Tensor({4, 3, 2}), 1.0f), DimensionError);
}

TEST_CASE("analytic provider returns F minus target") {
  const Tensor target = random_tensor({4, 2, 2}, 4);
  const Tensor f = random_tensor({4, 2, 2}, 5);
  const AnalyticTargetProvider p(target);
  const GuidanceResponse r = p.compute(request_for(f));
  for (size_t i = 0; i < f.size(); ++i) CHECK(r.grad[i] == f[i] - target[i]);
  CHECK_THROWS_AS(p.compute(request_for(Tensor({4, 3, 3}))), DimensionError);
}

TEST_CASE("mock provider is deterministic and bounded") {
  const MockNoiseProvider p(9, 0.5);
  const Tensor f({4, 8, 8});
  const GuidanceResponse a = p.compute(request_for(f));
  const GuidanceResponse b = p.compute(request_for(f));
  CHECK(a.grad == b.grad);
  CHECK(std::sqrt(squared_norm(a.grad.values())) <= 0.5 + 1e-6);
  CHECK(a.timestep >= 0.02);
  CHECK(a.timestep <= 0.98);
  GuidanceRequest later = request_for(f);
  later.iteration = 6;
  CHECK_FALSE(p.compute(later).grad == a.grad);
}

TEST_CASE("request validation") {
  GuidanceRequest r = request_for(Tensor({3, 2, 2}));
  CHECK_THROWS_AS(r.validate(), DimensionError);
  r.feature_image = Tensor({4, 2, 2});
  r.t_min = 0.9f;
  r.t_max = 0.1f;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r.t_min = 0.1f;
  r.t_max = 0.9f;
  r.cfg_scale = 0.0f;
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("remote provider round trip against an in-process server") {
  TestServer ts;
  ts.server().Post("/v1/sds_grad", [](const httplib::Request& req, httplib::Response& res) {
    const GuidanceRequest in = decode_sds_request(req.body);
    GuidanceResponse out;
    out.grad = in.feature_image;
    for (float& v : out.grad.values()) v = -v;
    out.timestep = 0.5;
    out.noise_norm = std::sqrt(squared_norm(out.grad.values()));
    res.set_content(encode_sds_response(out), "application/json");
  });
  ts.start();
  const RemoteProvider p(ts.endpoint());
  const Tensor f = random_tensor({4, 4, 4}, 8);
  const GuidanceResponse r = p.compute(request_for(f));
  REQUIRE(r.grad.shape() == f.shape());
  for (size_t i = 0; i < f.size(); ++i) CHECK(r.grad[i] == -f[i]);
  CHECK(r.timestep == 0.5);
  CHECK(p.name() == "remote");
}

TEST_CASE("remote provider rejects bad replies") {
  TestServer ts;
  std::string reply;
  ts.server().Post("/v1/sds_grad", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply, "application/json");
  });
  ts.start();
  const RemoteProvider p(ts.endpoint());
  const GuidanceRequest req = request_for(random_tensor({4, 2, 2}, 1));

  GuidanceResponse wrong;
  wrong.grad = Tensor({4, 3, 3});
  reply = encode_sds_response(wrong);
  CHECK_THROWS_AS(p.compute(req), GuidanceError);

  GuidanceResponse nan;
  nan.grad = Tensor({4, 2, 2});
  nan.grad[0] = std::nanf("");
  reply = encode_sds_response(nan);
  CHECK_THROWS_AS(p.compute(req), GuidanceError);

  reply = R"({"grad":{"shape":[4,2,2],"dtype":"f32","data":"@@@"}})";
  CHECK_THROWS_AS(p.compute(req), GuidanceError);

  reply = "<html>";
  CHECK_THROWS_AS(p.compute(req), GuidanceError);
}

TEST_CASE("prompt prefix") {
  CHECK(make_prompt("a photo of the face of", "Einstein") == "a photo of the face of Einstein");
  CHECK(make_prompt("", "x") == "x");
  CHECK(make_prompt("p", "") == "p");
}
