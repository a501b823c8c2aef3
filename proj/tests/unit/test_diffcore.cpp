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
#include <numeric>
#include <random>

#include "doctest.h"
#include "dualhead/adam.hpp"
#include "dualhead/errors.hpp"
#include "dualhead/gradcheck.hpp"
#include "dualhead/mlp.hpp"
#include "dualhead/resize.hpp"
#include "dualhead/tensor.hpp"

using namespace dualhead;

TEST_CASE("tensor shape checks and finiteness") {
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.dim(1) == 3);
  CHECK_THROWS_AS(t.dim(2), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), DimensionError);
  CHECK_THROWS_AS(t.expect_shape({3, 2}, "t"), DimensionError);
  CHECK_NOTHROW(t.expect_shape({2, 3}, "t"));
  t[4] = std::nanf("");
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.check_finite("t"), NumericError);
  CHECK(shape_to_string({4, 16, 16}) == "[4,16,16]");
}

TEST_CASE("tensor reductions") {
  const std::vector<float> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == doctest::Approx(32.0));
  CHECK(squared_norm(a) == doctest::Approx(14.0));
  CHECK(mean_squared_difference(a, b) == doctest::Approx(9.0));
}

TEST_CASE("offset mlp starts at exactly zero output") {
  std::mt19937_64 rng(3);
  const MlpParams p = make_offset_mlp(32, rng);
  CHECK(offset_mlp_widths(32) == std::vector<int>{35, 128, 128, 128, 3});
  CHECK_NOTHROW(validate_offset_mlp(p, 32));
  CHECK_THROWS_AS(validate_offset_mlp(p, 16), DimensionError);
  Tensor x({5, 35});
  std::normal_distribution<float> n;
  for (auto& v : x.values()) v = n(rng);
  const Tensor y = mlp_forward(p, x);
  CHECK(y.shape() == Shape{5, 3});
  for (float v : y.values()) CHECK(v == 0.0f);
  // He-uniform hidden weights stay within sqrt(6 / fan_in).
  for (size_t l = 0; l + 1 < p.layers.size(); ++l) {
    const float bound = std::sqrt(6.0f / static_cast<float>(p.layers[l].in));
    for (float w : p.layers[l].weight) CHECK(std::abs(w) <= bound);
  }
}

TEST_CASE("mlp forward matches a hand-computed network") {
  // 2 -> 2 (relu) -> 1 (scale * tanh)
  MlpParams p = make_zero_mlp(std::vector<int>{2, 2, 1}, 0.5f);
  p.layers[0].weight = {1, -1, 2, 1};
  p.layers[0].bias = {0.5f, -4.0f};
  p.layers[1].weight = {0.3f, 0.7f};
  p.layers[1].bias = {0.1f};
  Tensor x({1, 2}, std::vector<float>{1.0f, 2.0f});
  // h0 = relu(1 - 2 + 0.5) = 0, h1 = relu(2 + 2 - 4) = 0 -> out = 0.5 tanh(0.1)
  CHECK(mlp_forward(p, x)[0] == doctest::Approx(0.5 * std::tanh(0.1)).epsilon(1e-6));
  x = Tensor({1, 2}, std::vector<float>{3.0f, 1.0f});
  // h0 = 2.5, h1 = 3 -> 0.5 tanh(0.75 + 2.1 + 0.1)
  CHECK(mlp_forward(p, x)[0] == doctest::Approx(0.5 * std::tanh(2.95)).epsilon(1e-6));
}

TEST_CASE("mlp flatten round trip") {
  std::mt19937_64 rng(1);
  MlpParams p = make_offset_mlp(4, rng);
  std::vector<float> flat = p.flatten();
  CHECK(flat.size() == p.parameter_count());
  flat[flat.size() - 1] = 0.25f;
  MlpParams q = p;
  q.assign_flat(flat);
  CHECK(q.layers.back().bias.back() == 0.25f);
  CHECK_THROWS_AS(q.assign_flat(std::vector<float>(3)), DimensionError);
}

TEST_CASE("relu pattern tracks activation changes") {
  MlpParams p = make_zero_mlp(std::vector<int>{1, 1, 1});
  p.layers[0].weight = {1.0f};
  MlpTrace a, b, c;
  mlp_forward(p, Tensor({1, 1}, std::vector<float>{1.0f}), &a);
  mlp_forward(p, Tensor({1, 1}, std::vector<float>{2.0f}), &b);
  mlp_forward(p, Tensor({1, 1}, std::vector<float>{-1.0f}), &c);
  CHECK(relu_pattern(a) == relu_pattern(b));
  CHECK(relu_pattern(a) != relu_pattern(c));
}

TEST_CASE("bilinear resize oracle values") {
  // 1x2 -> 1x4 with half-pixel centres: sources at -0.25, 0.25, 0.75, 1.25.
  Tensor src({1, 1, 2}, std::vector<float>{0.0f, 4.0f});
  const Tensor up = bilinear_resize(src, 1, 4);
  CHECK(up[0] == doctest::Approx(0.0));
  CHECK(up[1] == doctest::Approx(1.0));
  CHECK(up[2] == doctest::Approx(3.0));
  CHECK(up[3] == doctest::Approx(4.0));
  // 2x downsampling averages pixel pairs.
  Tensor wide({1, 1, 4}, std::vector<float>{1, 3, 5, 9});
  const Tensor down = bilinear_resize(wide, 1, 2);
  CHECK(down[0] == doctest::Approx(2.0));
  CHECK(down[1] == doctest::Approx(7.0));
  // Same size is the identity.
  CHECK(bilinear_resize(wide, 1, 4) == wide);
}

TEST_CASE("bilinear resize backward is the transpose") {
  std::mt19937_64 rng(7);
  std::normal_distribution<float> n;
  Tensor x({2, 5, 3}), y({2, 8, 7});
  for (auto& v : x.values()) v = n(rng);
  for (auto& v : y.values()) v = n(rng);
  const double lhs = dot(bilinear_resize(x, 8, 7).values(), y.values());
  const double rhs = dot(x.values(), bilinear_resize_backward(x.shape(), y).values());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("gradcheck accepts a correct gradient and flags a wrong one") {
  std::vector<float> p{0.3f, -1.2f, 2.0f};
  const auto f = [&] { return double(p[0]) * p[0] + 3.0 * p[1] + std::sin(double(p[2])); };
  std::vector<float> good{2 * p[0], 3.0f, static_cast<float>(std::cos(p[2]))};
  GradcheckOptions opt;
  CHECK(gradcheck(f, p, good, opt, "good").passed());
  std::vector<float> bad = good;
  bad[1] = 2.5f;
  const GradcheckReport r = gradcheck(f, p, bad, opt, "bad");
  CHECK_FALSE(r.passed());
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].index == 1);
  // Parameters are restored after perturbation.
  CHECK(p == std::vector<float>{0.3f, -1.2f, 2.0f});
}

TEST_CASE("gradcheck skips regime changes and fails when most entries skip") {
  std::vector<float> p{0.0f, 1.0f};
  // |p0| has a kink at 0; the regime reports the sign of p0.
  const auto f = [&] { return std::abs(double(p[0])) + double(p[1]); };
  GradcheckOptions opt;
  opt.regime = [&] { return static_cast<uint64_t>(p[0] > 0.0f); };
  std::vector<float> g{0.0f, 1.0f};
  const GradcheckReport r = gradcheck(f, p, g, opt);
  CHECK(r.skipped == 1);
  CHECK(r.checked == 1);
  CHECK(r.passed());
  opt.max_skip_fraction = 0.25;
  CHECK_FALSE(gradcheck(f, p, g, opt).passed());
}

TEST_CASE("adam matches a scalar oracle") {
  AdamGroup g;
  std::vector<float> p{1.0f};
  const float lr = 0.1f, b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
  double m = 0, v = 0, x = 1.0;
  const double grads[3] = {0.5, -2.0, 1.0};
  for (int t = 1; t <= 3; ++t) {
    const std::vector<float> grad{static_cast<float>(grads[t - 1])};
    adam_step(g, p, grad, lr);
    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(p[0] == doctest::Approx(x).epsilon(1e-5));
  }
  CHECK(g.step == 3);
  // First step moves by lr * sign(g).
  AdamGroup h;
  std::vector<float> q{0.0f};
  adam_step(h, q, std::vector<float>{-7.0f}, 0.01f);
  CHECK(q[0] == doctest::Approx(0.01).epsilon(1e-5));
  CHECK_THROWS_AS(adam_step(h, q, std::vector<float>{1.0f, 2.0f}, 0.01f), DimensionError);
}
