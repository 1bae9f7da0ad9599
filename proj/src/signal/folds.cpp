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

#include "leadxfer/signal/folds.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "leadxfer/util/rng.hpp"

namespace leadxfer::signal {

std::vector<int> stratified_folds(const std::vector<std::vector<std::uint8_t>>& labels, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be at least 2");
  const std::size_t n = labels.size();
  const auto folds = static_cast<std::size_t>(k);
  if (n < folds) {
    throw std::invalid_argument("stratified_folds: " + std::to_string(n) + " records for " +
                                std::to_string(k) + " folds");
  }
  const std::size_t c = labels.front().size();
  for (const auto& y : labels) {
    if (y.size() != c) throw std::invalid_argument("stratified_folds: ragged label vectors");
  }

  // Column c is the "no positive label" column.
  const std::size_t cols = c + 1;
  std::vector<std::vector<std::size_t>> members(cols);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (labels[i][j]) {
        members[j].push_back(i);
        any = true;
      }
    }
    if (!any) members[c].push_back(i);
  }
  Rng rng(derive_seed(seed, "stratified_folds"));
  for (auto& m : members) rng.shuffle(m.begin(), m.end());

  std::vector<std::size_t> capacity(folds, n / folds);
  for (std::size_t f = 0; f < n % folds; ++f) ++capacity[f];

  // need[f][j]: outstanding demand of fold f for column j.
  std::vector<std::vector<double>> need(folds, std::vector<double>(cols));
  for (std::size_t f = 0; f < folds; ++f) {
    const double share = static_cast<double>(capacity[f]) / static_cast<double>(n);
    for (std::size_t j = 0; j < cols; ++j) need[f][j] = share * static_cast<double>(members[j].size());
  }

  std::vector<int> assignment(n, 0);
  std::vector<std::size_t> remaining(cols);
  for (std::size_t j = 0; j < cols; ++j) remaining[j] = members[j].size();

  auto columns_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < c; ++j) {
      if (labels[i][j]) out.push_back(j);
    }
    if (out.empty()) out.push_back(c);
    return out;
  };

  std::size_t unassigned = n;
  while (unassigned > 0) {
    std::size_t rarest = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (remaining[j] > 0 && (rarest == cols || remaining[j] < remaining[rarest])) rarest = j;
    }
    for (std::size_t i : members[rarest]) {
      if (assignment[i] != 0) continue;
      std::size_t best = folds;
      for (std::size_t f = 0; f < folds; ++f) {
        if (capacity[f] == 0) continue;
        if (best == folds || need[f][rarest] > need[best][rarest]) best = f;
      }
      assignment[i] = static_cast<int>(best) + 1;
      --capacity[best];
      --unassigned;
      for (std::size_t j : columns_of(i)) {
        need[best][j] -= 1.0;
        --remaining[j];
      }
    }
  }
  return assignment;
}

}  // namespace leadxfer::signal
