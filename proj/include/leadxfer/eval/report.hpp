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
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "leadxfer/eval/metrics.hpp"
#include "leadxfer/signal/ecg_record.hpp"
#include "leadxfer/train/trainer.hpp"

namespace leadxfer::eval {

struct ClassReport {
  std::string label_name;
  std::optional<double> auc;  // absent when the fold has a single outcome for the class
  double f1 = 0.0;
};

struct EvalReport {
  double macro_auc = 0.0;  // NaN (null in JSON) when every class was skipped
  double macro_f1 = 0.0;
  double mean_accuracy = 0.0;
  std::vector<ClassReport> per_class;
  std::size_t n_records = 0;
  std::optional<std::size_t> lead_index;
  int fold = 0;

  nlohmann::json to_json() const;
};

// Builds the report from predictions over one fold.
EvalReport make_report(const Predictions& p, const std::vector<std::string>& label_names, int fold,
                       std::optional<std::size_t> lead);

// Eval-mode predictions of `ckpt` on the records of `fold`. Single-lead models
// need `lead`; 12-lead models reject it. Throws ConfigError for either misuse
// and for a label-space mismatch.
Predictions predict_fold(const train::Checkpoint& ckpt, const signal::Dataset& dataset, int fold,
                         std::optional<std::size_t> lead);

EvalReport evaluate(const train::Checkpoint& ckpt, const signal::Dataset& dataset, int fold,
                    std::optional<std::size_t> lead);

// CSV with header id,fold,e0..e{P-1}: one projection row per record.
std::string export_embeddings(const train::Checkpoint& ckpt, const signal::Dataset& dataset,
                              std::optional<std::size_t> lead);

}  // namespace leadxfer::eval
