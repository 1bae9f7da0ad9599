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

#include "leadxfer/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace leadxfer::eval {

void Predictions::validate() const {
  if (scores.size() != n * c || labels.size() != n * c) {
    throw std::invalid_argument("Predictions: expected " + std::to_string(n * c) + " cells");
  }
  for (auto y : labels) {
    if (y > 1) throw std::invalid_argument("Predictions: labels must be 0/1");
  }
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks of the positives; tied groups share their average rank.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("roc_auc: both classes must be present");
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

MacroAuc macro_roc_auc(const Predictions& p) {
  p.validate();
  MacroAuc out;
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> s(p.n);
  std::vector<std::uint8_t> y(p.n);
  for (std::size_t j = 0; j < p.c; ++j) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
      s[i] = p.score(i, j);
      y[i] = p.label(i, j);
      pos += y[i];
    }
    if (pos == 0 || pos == p.n) {
      out.per_class.push_back(std::nullopt);
      out.skipped.push_back(j);
      continue;
    }
    const double auc = roc_auc(s, y);
    out.per_class.push_back(auc);
    sum += auc;
    ++used;
  }
  out.macro = used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

F1Result f1_scores(const Predictions& p, double threshold) {
  p.validate();
  F1Result out;
  for (std::size_t j = 0; j < p.c; ++j) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
      const bool pred = p.score(i, j) >= threshold;
      const bool truth = p.label(i, j) != 0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    out.per_class.push_back(denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0);
  }
  out.macro = p.c ? std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) / static_cast<double>(p.c) : 0.0;
  return out;
}

double mean_accuracy(const Predictions& p, double threshold) {
  p.validate();
  if (p.n * p.c == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < p.n * p.c; ++k) {
    correct += (p.scores[k] >= threshold) == (p.labels[k] != 0);
  }
  return static_cast<double>(correct) / static_cast<double>(p.n * p.c);
}

}  // namespace leadxfer::eval
