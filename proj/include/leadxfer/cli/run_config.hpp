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
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leadxfer/model/backbone.hpp"
#include "leadxfer/signal/synth.hpp"
#include "leadxfer/train/train_config.hpp"

namespace leadxfer::cli {

enum class Kind { kInt, kUInt, kNumber, kString, kOptUInt, kUIntList, kNumberList };

struct KeySpec {
  std::string key;
  Kind kind;
  nlohmann::json default_value;
  std::string help;
};

// Every accepted configuration key, flat, in a fixed order.
const std::vector<KeySpec>& config_schema();

// Effective configuration: one value for every schema key.
struct RunConfig {
  std::string command;
  nlohmann::json values;

  signal::SynthConfig synth() const;
  model::BackboneConfig backbone() const;
  train::TrainConfig train() const;

  std::string path(const std::string& key) const;  // "" when unset
  std::optional<std::size_t> lead() const;
  std::size_t fold() const;
  std::vector<std::size_t> leads() const;
  std::vector<std::uint64_t> seeds() const;
};

// Checks `value` against the kind of `key`; throws ConfigError naming the key
// path for an unknown key or a type mismatch. Returns the normalised value.
nlohmann::json check_value(const std::string& key, const nlohmann::json& value);

// Parses a command-line string for `key`: numbers and lists as JSON, comma
// lists ("0,3,5") and ranges ("0..11") for list keys, "none" for an unset
// optional. Throws ConfigError.
nlohmann::json parse_flag_value(const std::string& key, const std::string& text);

// Defaults, overlaid by the JSON object in `file` (if non-empty), overlaid by
// `overrides`. Throws ConfigError for malformed JSON, unknown keys, type
// mismatches and invalid values.
RunConfig parse_config(const std::string& command, const std::filesystem::path& file,
                       const std::map<std::string, nlohmann::json>& overrides);

}  // namespace leadxfer::cli
