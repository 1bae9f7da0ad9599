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
#include <optional>
#include <span>
#include <vector>

namespace leadxfer::eval {

// Row-major [n x C] scores with matching 0/1 labels.
struct Predictions {
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;

  double score(std::size_t i, std::size_t j) const { return scores[i * c + j]; }
  std::uint8_t label(std::size_t i, std::size_t j) const { return labels[i * c + j]; }
  void validate() const;  // throws std::invalid_argument
};

// Mann-Whitney AUC: P(score of a random positive > score of a random
// negative), ties counting one half. Throws std::invalid_argument when only
// one outcome is present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MacroAuc {
  double macro = 0.0;  // NaN when every class was skipped
  std::vector<std::optional<double>> per_class;
  std::vector<std::size_t> skipped;  // classes with a single outcome value
};

// Unweighted mean of per-class AUC over the classes that have both outcomes.
MacroAuc macro_roc_auc(const Predictions& p);

struct F1Result {
  double macro = 0.0;
  std::vector<double> per_class;
};

// Per class 2TP / (2TP + FP + FN) with prediction = score >= threshold; 0 when
// the denominator is 0.
F1Result f1_scores(const Predictions& p, double threshold = 0.5);

// Fraction of correct per-cell binary decisions over all n * C cells.
double mean_accuracy(const Predictions& p, double threshold = 0.5);

}  // namespace leadxfer::eval
