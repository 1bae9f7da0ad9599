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

#include <map>
#include <string>
#include <vector>

#include "leadxfer/autodiff/tensor.hpp"

namespace leadxfer::train {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments per parameter name, created zeroed on first use.
struct AdamState {
  std::map<std::string, std::vector<float>> m;
  std::map<std::string, std::vector<float>> v;
};

// One bias-corrected Adam update at step t (1-based) using each tensor's
// `grad`. Tensors without requires_grad are skipped; an empty grad counts as
// zero. Throws std::invalid_argument for t < 1.
void adam_step(std::map<std::string, ad::Tensor>& params, AdamState& state, const AdamHyper& hyper, long t);

}  // namespace leadxfer::train
