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

#include "leadxfer/train/train_config.hpp"

#include "leadxfer/util/errors.hpp"

namespace leadxfer::train {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs", "must be >= 0");
  if (batch_size < 2) throw ConfigError("batch_size", "must be >= 2 for batch normalisation");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate", "must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("adam_beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("adam_beta2", "must be in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("adam_eps", "must be positive");
  if (negatives == 0) throw ConfigError("negatives", "must be positive");
  if (!(bank_momentum >= 0 && bank_momentum <= 1)) throw ConfigError("bank_momentum", "must be in [0, 1]");
  weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"alpha", weights.alpha},
          {"beta", weights.beta},
          {"tau", weights.tau},
          {"tau_kd", weights.tau_kd},
          {"negatives", negatives},
          {"student_lead", student_lead},
          {"seed", seed},
          {"bank_momentum", bank_momentum},
          {"student_init", student_init}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.weights.alpha = j.at("alpha").get<double>();
  c.weights.beta = j.at("beta").get<double>();
  c.weights.tau = j.at("tau").get<double>();
  c.weights.tau_kd = j.at("tau_kd").get<double>();
  c.negatives = j.at("negatives").get<std::size_t>();
  c.student_lead = j.at("student_lead").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.bank_momentum = j.at("bank_momentum").get<double>();
  c.student_init = j.value("student_init", std::string{});
  return c;
}

}  // namespace leadxfer::train
