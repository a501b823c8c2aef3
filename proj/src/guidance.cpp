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

#include "dualhead/guidance.hpp"

#include <cmath>
#include <random>

#include "dualhead/errors.hpp"

namespace dualhead {

void GuidanceRequest::validate() const {
  if (feature_image.rank() != 3 || feature_image.dim(0) != 4) {
    throw DimensionError("guidance request image must be [4,H,W], got " +
                         shape_to_string(feature_image.shape()));
  }
  if (!(cfg_scale > 0.0f)) throw ConfigError("cfg_scale must be positive");
  if (!(t_min >= 0.0f && t_min <= t_max && t_max <= 1.0f)) {
    throw ConfigError("timestep range must satisfy 0 <= t_min <= t_max <= 1");
  }
}

Tensor sds_grad_formula(const Tensor& noise_pred, const Tensor& eps, float w) {
  if (w == 0.0f || !std::isfinite(w)) throw ConfigError("sds_grad_formula: w must be finite and non-zero");
  eps.expect_shape(noise_pred.shape(), "sds eps");
  Tensor g(noise_pred.shape());
  for (size_t i = 0; i < g.size(); ++i) g[i] = (noise_pred[i] - eps[i]) / w;
  return g;
}

GuidanceResponse AnalyticTargetProvider::compute(const GuidanceRequest& request) const {
  request.feature_image.expect_shape(target_.shape(), "analytic guidance input");
  GuidanceResponse r;
  r.grad = Tensor(target_.shape());
  for (size_t i = 0; i < r.grad.size(); ++i) r.grad[i] = request.feature_image[i] - target_[i];
  return r;
}

GuidanceResponse MockNoiseProvider::compute(const GuidanceRequest& request) const {
  request.validate();
  std::seed_seq seq{seed_, request.seed, static_cast<uint64_t>(request.iteration)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::uniform_real_distribution<double> t(request.t_min, request.t_max);
  GuidanceResponse r;
  r.timestep = t(rng);
  r.grad = Tensor(request.feature_image.shape());
  for (float& v : r.grad.values()) v = normal(rng);
  const double norm = std::sqrt(squared_norm(r.grad.values()));
  if (norm > max_norm_) {
    const float s = static_cast<float>(max_norm_ / norm);
    for (float& v : r.grad.values()) v *= s;
  }
  r.noise_norm = std::sqrt(squared_norm(r.grad.values()));
  return r;
}

GuidanceResponse RemoteProvider::compute(const GuidanceRequest& request) const {
  request.validate();
  GuidanceResponse r = decode_sds_response(client_.post("/v1/sds_grad", encode_sds_request(request)));
  if (r.grad.shape() != request.feature_image.shape()) {
    throw GuidanceError("sds_grad response has shape " + shape_to_string(r.grad.shape()) +
                        ", expected " + shape_to_string(request.feature_image.shape()));
  }
  if (!r.grad.all_finite()) throw GuidanceError("sds_grad response contains non-finite values");
  return r;
}

std::string make_prompt(const std::string& prefix, const std::string& prompt) {
  if (prefix.empty()) return prompt;
  if (prompt.empty()) return prefix;
  return prefix + " " + prompt;
}

}  // namespace dualhead
