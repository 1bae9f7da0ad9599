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
#include <cstdint>
#include <span>
#include <vector>

#include "leadxfer/autodiff/tensor.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::bank {

// One unit-norm embedding per training sample. Rows are momentum-blended with
// fresh features and re-normalised, so every row keeps unit L2 norm.
class MemoryBank {
 public:
  // Rows are i.i.d. standard normal vectors, L2-normalised.
  MemoryBank(std::size_t num_samples, std::uint64_t seed, double momentum = 0.5, std::size_t dim = 128);
  // Adopts existing rows [num_samples x dim] (e.g. from a checkpoint).
  MemoryBank(ad::Tensor rows, double momentum);

  std::size_t size() const { return num_samples_; }
  std::size_t dim() const { return dim_; }
  double momentum() const { return momentum_; }
  std::span<const float> row(std::size_t i) const;
  const std::vector<float>& data() const { return rows_; }
  ad::Tensor to_tensor() const;

  // row_j <- normalize(m * row_j + (1 - m) * f_j). `features` is [k x dim]
  // with unit rows. Throws std::invalid_argument for duplicate indices and
  // std::out_of_range for indices past the end.
  void update(std::span<const std::size_t> indices, std::span<const float> features);

  // `count` rows drawn uniformly without replacement from the rows not in
  // `exclude`, returned as copies [count x dim]. Throws std::invalid_argument
  // when fewer than `count` rows are eligible.
  ad::Tensor sample(std::size_t count, std::span<const std::size_t> exclude, Rng& rng) const;
  std::vector<std::size_t> sample_indices(std::size_t count, std::span<const std::size_t> exclude, Rng& rng) const;

 private:
  std::size_t num_samples_;
  std::size_t dim_;
  double momentum_;
  std::vector<float> rows_;
};

}  // namespace leadxfer::bank
