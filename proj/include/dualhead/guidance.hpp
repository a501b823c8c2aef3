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

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "dualhead/messages.hpp"
#include "dualhead/tensor.hpp"
#include "dualhead/wire.hpp"

namespace dualhead {

// grad = (noise_pred - eps) / w, elementwise. Throws ConfigError for w == 0.
Tensor sds_grad_formula(const Tensor& noise_pred, const Tensor& eps, float w);

// Source of d(loss)/dF. Implementations must not keep per-request state.
class GuidanceProvider {
 public:
  virtual ~GuidanceProvider() = default;
  virtual GuidanceResponse compute(const GuidanceRequest& request) const = 0;
  virtual std::string name() const = 0;
};

// grad = F - target, the gradient of 0.5 ||F - target||^2.
class AnalyticTargetProvider final : public GuidanceProvider {
 public:
  explicit AnalyticTargetProvider(Tensor target) : target_(std::move(target)) {}
  GuidanceResponse compute(const GuidanceRequest& request) const override;
  std::string name() const override { return "analytic"; }
  const Tensor& target() const { return target_; }

 private:
  Tensor target_;
};

// Gaussian noise from (seed, request.seed, request.iteration), rescaled so its
// L2 norm never exceeds max_norm.
class MockNoiseProvider final : public GuidanceProvider {
 public:
  MockNoiseProvider(uint64_t seed, double max_norm) : seed_(seed), max_norm_(max_norm) {}
  GuidanceResponse compute(const GuidanceRequest& request) const override;
  std::string name() const override { return "mock"; }

 private:
  uint64_t seed_;
  double max_norm_;
};

// POSTs to /v1/sds_grad. Shape mismatches and non-finite gradients become
// GuidanceError just like transport faults.
class RemoteProvider final : public GuidanceProvider {
 public:
  explicit RemoteProvider(Endpoint endpoint) : client_(std::move(endpoint)) {}
  GuidanceResponse compute(const GuidanceRequest& request) const override;
  std::string name() const override { return "remote"; }

 private:
  WireClient client_;
};

// prefix + " " + prompt, or just the prompt for an empty prefix.
std::string make_prompt(const std::string& prefix, const std::string& prompt);

}  // namespace dualhead
