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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leadxfer/model/backbone.hpp"
#include "leadxfer/signal/ecg_record.hpp"
#include "leadxfer/train/train_config.hpp"

namespace leadxfer::train {

// Trained (or initial) model plus how it was produced.
struct Checkpoint {
  std::string stage;  // "teacher", "student" (BCE only) or "distill"
  model::ModelParams model;
  TrainConfig train;
  int epoch = 0;  // selected epoch, 0 = initialisation
  std::optional<double> val_auc;
  std::uint64_t init_fingerprint = 0;  // parameters before the first step
  std::optional<std::uint64_t> teacher_fingerprint;
  std::optional<ad::Tensor> student_bank;
  std::optional<ad::Tensor> teacher_bank;
};

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const char> bytes);  // throws FormatError
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochLog {
  std::string stage;
  int epoch = 0;
  double train_loss = 0.0;
  double bce = 0.0;
  double mkd = 0.0;
  double clt = 0.0;
  std::optional<double> val_auc;  // null when no validation class has both outcomes

  // {stage, epoch, train_loss, components:{bce,mkd,clt}, val_auc}
  nlohmann::json to_json() const;
};

using LogSink = std::function<void(const EpochLog&)>;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// Trains a 12-lead model with BCE on folds 1-8 and keeps the epoch with the
// best fold-9 macro AUC (earliest on ties). `backbone` supplies the
// architecture; in_leads and n_classes come from the dataset.
TrainResult train_teacher(const signal::Dataset& dataset, const TrainConfig& config,
                          const model::BackboneConfig& backbone, const LogSink& sink = {});

// Single-lead model on config.student_lead trained with BCE only.
TrainResult train_student(const signal::Dataset& dataset, const TrainConfig& config,
                          const model::BackboneConfig& backbone, const LogSink& sink = {});

// Single-lead student trained against a frozen 12-lead teacher with
// bce + alpha * mkd + beta * clt. With alpha = beta = 0 the run is identical
// to train_student under the same seed. Throws ConfigError on a label-space
// mismatch or a lead out of range.
TrainResult distill_student(const signal::Dataset& dataset, const Checkpoint& teacher, const TrainConfig& config,
                            const model::BackboneConfig& backbone, const LogSink& sink = {});

}  // namespace leadxfer::train
