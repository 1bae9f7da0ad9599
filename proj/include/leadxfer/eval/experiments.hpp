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
#include <string>
#include <vector>

#include "leadxfer/eval/report.hpp"
#include "leadxfer/model/backbone.hpp"
#include "leadxfer/train/trainer.hpp"

namespace leadxfer::eval {

// How every student in a sweep or grid is trained. `config.student_lead` is
// overridden per run; seeds are shared across the compared variants.
struct StudentRecipe {
  train::TrainConfig config;
  model::BackboneConfig backbone;
  std::vector<std::uint64_t> seeds;  // empty = {config.seed}
  train::LogSink sink;
};

struct StudentRun {
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  train::TrainResult result;
  EvalReport test;  // on the test fold
};

// One student with the given weights. alpha = beta = 0 trains with BCE alone,
// which matches distillation with zero weights under the same seed.
StudentRun run_student(const signal::Dataset& dataset, const train::Checkpoint& teacher, const StudentRecipe& recipe,
                       std::size_t lead, std::uint64_t seed, double alpha, double beta);

struct SweepRow {
  std::size_t lead = 0;
  double baseline_auc = 0.0;  // median over seeds
  double mvkt_auc = 0.0;
  std::size_t n_seeds = 0;
};

// For each lead: BCE-only and distilled students (recipe weights) with
// identical seeds, scored on the test fold. Throws std::invalid_argument for
// an empty lead list.
std::vector<SweepRow> lead_sweep(const signal::Dataset& dataset, const train::Checkpoint& teacher,
                                 const StudentRecipe& recipe, const std::vector<std::size_t>& leads);

std::string sweep_csv(const std::vector<SweepRow>& rows);
// Line chart: lead index on x, AUC on y, one polyline per method.
std::string sweep_svg(const std::vector<SweepRow>& rows);

struct GridRow {
  std::string name;  // BCE, BCE+MKD, BCE+CLT, BCE+MKD+CLT
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int epoch = 0;
  EvalReport test;
  std::uint64_t init_fingerprint = 0;
};

// The four loss combinations (0,0), (a,0), (0,b), (a,b) with a, b taken from
// the recipe weights, for every recipe seed, on recipe.config.student_lead.
std::vector<GridRow> ablation_grid(const signal::Dataset& dataset, const train::Checkpoint& teacher,
                                   const StudentRecipe& recipe);

std::string grid_csv(const std::vector<GridRow>& rows);

double median(std::vector<double> values);

}  // namespace leadxfer::eval
