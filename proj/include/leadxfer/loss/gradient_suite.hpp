/*
 * Copyright 2026 The leadxfer Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace leadxfer::loss {

struct GradCheckCase {
  std::string name;
  int trials = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradientSuiteReport {
  std::vector<GradCheckCase> cases;
  double tolerance = 1e-3;
  double seconds = 0.0;
  bool passed() const;
};

// Finite-difference certification of every differentiable op and every loss:
// each case is checked at `trials` seeded random inputs (entries in [-2, 2],
// kept away from kinks and saturation).
GradientSuiteReport run_gradient_suite(std::uint64_t seed = 20240611, int trials = 10, double tolerance = 1e-3);

}  // namespace leadxfer::loss
