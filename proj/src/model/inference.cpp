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

#include "leadxfer/model/inference.hpp"

#include "leadxfer/util/errors.hpp"

namespace leadxfer::model {

Inference infer(ModelParams& params, std::span<const float> inputs, std::size_t n, std::size_t length,
                bool with_embeddings, std::size_t chunk) {
  const std::size_t leads = params.config.in_leads;
  const std::size_t per_record = leads * length;
  if (inputs.size() != n * per_record) {
    throw ShapeError("infer: expected " + std::to_string(n * per_record) + " input values, got " +
                     std::to_string(inputs.size()));
  }
  if (chunk == 0) chunk = 1;
  Inference out;
  out.n = n;
  out.probs.reserve(n * params.config.n_classes);
  if (with_embeddings) out.embeddings.reserve(n * params.config.proj_dim);

  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t b = std::min(chunk, n - start);
    ad::Tape tape;
    auto first = inputs.begin() + static_cast<std::ptrdiff_t>(start * per_record);
    std::vector<float> values(first, first + static_cast<std::ptrdiff_t>(b * per_record));
    auto x = tape.constant({b, leads, length}, std::move(values));
    auto out_vars = forward(tape, params, x, Mode::kEval);
    auto p = out_vars.probs.value();
    out.probs.insert(out.probs.end(), p.begin(), p.end());
    if (with_embeddings) {
      auto e = project(tape, params, out_vars.rep).value();
      out.embeddings.insert(out.embeddings.end(), e.begin(), e.end());
    }
  }
  return out;
}

}  // namespace leadxfer::model
