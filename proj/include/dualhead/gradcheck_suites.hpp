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
#include <string>
#include <vector>

#include "dualhead/gradcheck.hpp"

namespace dualhead {

struct SuiteResult {
  std::string suite;
  std::vector<GradcheckReport> reports;
  double seconds = 0.0;

  bool passed() const;
};

// mlp, resize, raster, seg, geom.
std::vector<std::string> gradcheck_suite_names();

// Runs one named suite, or every suite for "all". Each adjoint is checked on
// three seeded random instances. Throws ConfigError for an unknown name.
std::vector<SuiteResult> run_gradcheck_suite(const std::string& name, uint64_t seed = 0);

}  // namespace dualhead
