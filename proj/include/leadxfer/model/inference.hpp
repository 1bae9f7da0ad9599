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

#include <cstddef>
#include <span>
#include <vector>

#include "leadxfer/model/backbone.hpp"

namespace leadxfer::model {

// Eval-mode outputs for a stack of inputs, row-major.
struct Inference {
  std::size_t n = 0;
  std::vector<float> probs;       // [n x C]
  std::vector<float> embeddings;  // [n x proj_dim], empty unless requested
};

// inputs: [n x in_leads x length], contiguous. Runs in chunks of `chunk`
// records; parameters and running statistics are left untouched.
Inference infer(ModelParams& params, std::span<const float> inputs, std::size_t n, std::size_t length,
                bool with_embeddings, std::size_t chunk = 128);

}  // namespace leadxfer::model
