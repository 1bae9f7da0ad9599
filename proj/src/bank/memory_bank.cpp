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

#include "leadxfer/bank/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "leadxfer/util/errors.hpp"

namespace leadxfer::bank {

namespace {
void normalize_row(std::span<float> row) {
  double ss = 0.0;
  for (float v : row) ss += static_cast<double>(v) * v;
  const double inv = 1.0 / (std::sqrt(ss) + 1e-12);
  for (float& v : row) v = static_cast<float>(v * inv);
}
}  // namespace

MemoryBank::MemoryBank(std::size_t num_samples, std::uint64_t seed, double momentum, std::size_t dim)
    : num_samples_(num_samples), dim_(dim), momentum_(momentum), rows_(num_samples * dim) {
  if (num_samples == 0) throw std::invalid_argument("MemoryBank: num_samples must be positive");
  if (dim == 0) throw std::invalid_argument("MemoryBank: dim must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw std::invalid_argument("MemoryBank: momentum must lie in [0, 1]");
  Rng rng(derive_seed(seed, "memory_bank"));
  for (auto& v : rows_) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < num_samples_; ++i) normalize_row(std::span(rows_).subspan(i * dim_, dim_));
}

MemoryBank::MemoryBank(ad::Tensor rows, double momentum) : momentum_(momentum) {
  if (rows.shape.size() != 2 || rows.shape[0] == 0 || rows.shape[1] == 0) {
    throw ShapeError("MemoryBank: rows must be [num_samples, dim], got " + ad::shape_str(rows.shape));
  }
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw std::invalid_argument("MemoryBank: momentum must lie in [0, 1]");
  num_samples_ = rows.shape[0];
  dim_ = rows.shape[1];
  rows_ = std::move(rows.data);
}

std::span<const float> MemoryBank::row(std::size_t i) const {
  if (i >= num_samples_) throw std::out_of_range("MemoryBank: row " + std::to_string(i) + " out of range");
  return std::span<const float>(rows_).subspan(i * dim_, dim_);
}

ad::Tensor MemoryBank::to_tensor() const { return ad::Tensor({num_samples_, dim_}, rows_); }

void MemoryBank::update(std::span<const std::size_t> indices, std::span<const float> features) {
  if (features.size() != indices.size() * dim_) {
    throw ShapeError("MemoryBank::update: " + std::to_string(indices.size()) + " indices but " +
                     std::to_string(features.size()) + " feature values for dim " + std::to_string(dim_));
  }
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("MemoryBank::update: duplicate index");
  }
  if (!sorted.empty() && sorted.back() >= num_samples_) {
    throw std::out_of_range("MemoryBank::update: index " + std::to_string(sorted.back()) + " out of range");
  }
  const float m = static_cast<float>(momentum_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto dst = std::span(rows_).subspan(indices[k] * dim_, dim_);
    auto f = features.subspan(k * dim_, dim_);
    if (momentum_ == 1.0) continue;
    if (momentum_ == 0.0) {
      std::copy(f.begin(), f.end(), dst.begin());
      continue;
    }
    for (std::size_t j = 0; j < dim_; ++j) dst[j] = m * dst[j] + (1.0f - m) * f[j];
    normalize_row(dst);
  }
}

std::vector<std::size_t> MemoryBank::sample_indices(std::size_t count, std::span<const std::size_t> exclude,
                                                    Rng& rng) const {
  std::vector<char> excluded(num_samples_, 0);
  for (auto i : exclude) {
    if (i < num_samples_) excluded[i] = 1;
  }
  std::vector<std::size_t> pool;
  pool.reserve(num_samples_);
  for (std::size_t i = 0; i < num_samples_; ++i) {
    if (!excluded[i]) pool.push_back(i);
  }
  if (count > pool.size()) {
    throw std::invalid_argument("MemoryBank::sample: requested " + std::to_string(count) + " rows but only " +
                                std::to_string(pool.size()) + " are eligible");
  }
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

ad::Tensor MemoryBank::sample(std::size_t count, std::span<const std::size_t> exclude, Rng& rng) const {
  const auto picks = sample_indices(count, exclude, rng);
  ad::Tensor out({count, dim_});
  for (std::size_t k = 0; k < count; ++k) {
    std::copy_n(rows_.data() + picks[k] * dim_, dim_, out.data.data() + k * dim_);
  }
  return out;
}

}  // namespace leadxfer::bank
