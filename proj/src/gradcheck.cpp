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

#include "dualhead/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dualhead/errors.hpp"

namespace dualhead {

std::string GradcheckReport::summary() const {
  std::ostringstream os;
  os << (name.empty() ? "gradcheck" : name) << ": " << (passed() ? "PASS" : "FAIL")
     << " checked=" << checked;
  if (skipped) os << " skipped=" << skipped << (too_many_skipped ? "(too many)" : "");
  os << " max_rel_err=" << max_rel_error;
  if (!failures.empty()) {
    os << " failing=[";
    for (size_t i = 0; i < failures.size() && i < 8; ++i) {
      if (i) os << ',';
      os << failures[i].index;
    }
    if (failures.size() > 8) os << ",...";
    os << ']';
  }
  return os.str();
}

GradcheckReport gradcheck(const std::function<double()>& f, std::span<float> params,
                          std::span<const float> analytic, const GradcheckOptions& options,
                          std::string name) {
  if (params.size() != analytic.size()) {
    throw DimensionError("gradcheck: parameter and gradient lengths differ");
  }
  std::vector<size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), size_t{0});
  const bool sampled_subset = options.max_checks > 0 && options.max_checks < indices.size();
  if (sampled_subset) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(indices.begin(), indices.end(), rng);
  }

  GradcheckReport report;
  report.name = std::move(name);
  const float h = static_cast<float>(options.step);
  uint64_t base_regime = 0;
  if (options.regime) {
    f();
    base_regime = options.regime();
  }
  for (size_t idx : indices) {
    if (sampled_subset && report.checked >= options.max_checks) break;
    const float orig = params[idx];
    const float up = orig + h;
    const float down = orig - h;
    params[idx] = up;
    const double f_up = f();
    const bool up_same = !options.regime || options.regime() == base_regime;
    params[idx] = down;
    const double f_down = f();
    const bool down_same = !options.regime || options.regime() == base_regime;
    params[idx] = orig;
    if (!up_same || !down_same) {
      ++report.skipped;
      continue;
    }
    const double numeric = (f_up - f_down) / (static_cast<double>(up) - down);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.checked;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    if (!(rel < options.tolerance)) report.failures.push_back({idx, a, numeric, rel});
  }
  const size_t sampled = report.checked + report.skipped;
  report.too_many_skipped =
      sampled > 0 && static_cast<double>(report.skipped) > options.max_skip_fraction * sampled;
  return report;
}

}  // namespace dualhead
