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

#include "leadxfer/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace leadxfer::train {

void adam_step(std::map<std::string, ad::Tensor>& params, AdamState& state, const AdamHyper& hyper, long t) {
  if (t < 1) throw std::invalid_argument("adam_step: step index must be >= 1, got " + std::to_string(t));
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (auto& [name, p] : params) {
    if (!p.requires_grad) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != p.size()) m.assign(p.size(), 0.0f);
    if (v.size() != p.size()) v.assign(p.size(), 0.0f);
    const bool has_grad = p.grad.size() == p.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = has_grad ? p.grad[i] : 0.0;
      const double mi = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
      const double vi = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double step = hyper.lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps);
      p.data[i] = static_cast<float>(p.data[i] - step);
    }
  }
}

}  // namespace leadxfer::train
