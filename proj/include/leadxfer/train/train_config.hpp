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
#include <json.hpp>
#include <string>

#include "leadxfer/loss/losses.hpp"
#include "leadxfer/train/adam.hpp"

namespace leadxfer::train {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  loss::LossWeights weights;
  std::size_t negatives = 1024;  // capped at train size - batch size
  std::size_t student_lead = 0;
  std::uint64_t seed = 0;
  double bank_momentum = 0.5;
  std::string student_init;  // optional checkpoint to start the student from

  void validate() const;  // throws ConfigError
  AdamHyper adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }

  // Flat keys; the loss weights appear as alpha, beta, tau, tau_kd.
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace leadxfer::train
