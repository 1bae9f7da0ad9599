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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "leadxfer/autodiff/tape.hpp"

namespace leadxfer::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Compares the float32 reverse-mode gradient of a scalar function against
// float64 central differences:
//
//   max_i |analytic_i - (f(x + eps e_i) - f(x - eps e_i)) / (2 eps)| / max(1, |analytic_i|)
//
// `f` is called as f(tape, x) for both BasicTape<float> and BasicTape<double>
// (a generic lambda works) and must return a scalar on that tape. It must be
// deterministic: any randomness has to be re-seeded inside f.
template <typename F>
GradCheckResult finite_diff_check(F&& f, const Shape& shape, const std::vector<double>& x, double eps = 1e-3) {
  GradCheckResult r;
  {
    BasicTape<float> tape;
    std::vector<float> xf(x.begin(), x.end());
    auto in = tape.leaf(BasicTensor<float>(shape, std::move(xf)), true);
    auto out = f(tape, in);
    tape.backward(out);
    auto g = tape.grad(in);
    r.analytic.assign(g.begin(), g.end());
  }
  auto eval = [&](const std::vector<double>& point) {
    BasicTape<double> tape;
    auto in = tape.leaf(BasicTensor<double>(shape, point), true);
    return static_cast<double>(f(tape, in).item());
  };
  std::vector<double> probe = x;
  r.numeric.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = eval(probe);
    probe[i] = x[i] - eps;
    const double down = eval(probe);
    probe[i] = x[i];
    r.numeric[i] = (up - down) / (2.0 * eps);
    const double err = std::abs(r.analytic[i] - r.numeric[i]) / std::max(1.0, std::abs(r.analytic[i]));
    if (err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst_index = i;
    }
  }
  return r;
}

}  // namespace leadxfer::ad
