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
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dualhead {

struct GradcheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor). Entries whose
  // gradients are both below the floor are compared on the absolute scale.
  double abs_floor = 1e-6;
  // Compare this many entries (0 = all), drawn in an order shuffled with
  // `seed`; skipped entries do not count toward the total.
  size_t max_checks = 0;
  uint64_t seed = 0;
  // Optional fingerprint of the piecewise regime of f (e.g. ReLU activation
  // pattern), read right after each f() call. Entries whose +h or -h
  // evaluation lands in a different regime are skipped rather than compared.
  std::function<uint64_t()> regime;
  // A report with more skipped than this fraction of sampled entries fails.
  double max_skip_fraction = 0.75;
};

struct GradcheckFailure {
  size_t index;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradcheckReport {
  std::string name;
  size_t checked = 0;
  size_t skipped = 0;
  bool too_many_skipped = false;
  double max_rel_error = 0.0;
  std::vector<GradcheckFailure> failures;
  bool passed() const { return failures.empty() && !too_many_skipped; }
  std::string summary() const;
};

// Central-difference check of `analytic` against f(params). `params` is
// perturbed in place and restored; f must read it through the span owner.
// The effective step is the float-rounded difference (p+h) - (p-h).
GradcheckReport gradcheck(const std::function<double()>& f, std::span<float> params,
                          std::span<const float> analytic, const GradcheckOptions& options,
                          std::string name = {});

}  // namespace dualhead
