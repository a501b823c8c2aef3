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

#include "dualhead/adam.hpp"

#include <cmath>

#include "dualhead/errors.hpp"

namespace dualhead {

void adam_step(AdamGroup& group, std::span<float> params, std::span<const float> grads, float lr,
               const AdamConfig& config) {
  if (grads.size() != params.size()) throw DimensionError("adam_step: gradient size mismatch");
  if (group.m.empty() && group.v.empty()) {
    group.m.assign(params.size(), 0.0f);
    group.v.assign(params.size(), 0.0f);
  }
  if (group.m.size() != params.size() || group.v.size() != params.size()) {
    throw DimensionError("adam_step: moment size mismatch");
  }
  ++group.step;
  const double t = static_cast<double>(group.step);
  const float c1 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta1), t));
  const float c2 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta2), t));
  for (size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i];
    group.m[i] = config.beta1 * group.m[i] + (1.0f - config.beta1) * g;
    group.v[i] = config.beta2 * group.v[i] + (1.0f - config.beta2) * g * g;
    const float m_hat = group.m[i] / c1;
    const float v_hat = group.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace dualhead
