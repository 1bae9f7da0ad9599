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
#include <map>
#include <span>
#include <string>
#include <vector>

namespace leadxfer::signal {

// One multi-lead recording with its multi-hot diagnosis vector.
struct EcgRecord {
  std::string id;
  int sampling_rate_hz = 100;
  std::size_t n_leads = 0;
  std::size_t length = 0;
  std::vector<float> samples;         // lead-major, n_leads * length
  std::vector<std::uint8_t> labels;   // 0/1 per class

  std::span<const float> lead(std::size_t index) const {
    return std::span<const float>(samples).subspan(index * length, length);
  }
  std::span<float> lead(std::size_t index) {
    return std::span<float>(samples).subspan(index * length, length);
  }

  // Throws std::invalid_argument naming the record when the invariants fail.
  void validate() const;
};

struct ManifestEntry {
  std::string id;
  std::string file;
  std::size_t n_leads = 0;
  std::size_t length = 0;
  int fold = 0;  // 1..10
};

struct DatasetManifest {
  std::vector<std::string> label_names;
  int sampling_rate_hz = 100;
  std::size_t n_leads = 12;
  std::size_t length = 0;
  std::vector<ManifestEntry> records;

  std::size_t n_classes() const { return label_names.size(); }
  std::map<std::string, int> fold_of() const;
};

// Manifest plus the records it describes, in manifest order.
struct Dataset {
  DatasetManifest manifest;
  std::vector<EcgRecord> records;

  int fold(std::size_t i) const { return manifest.records.at(i).fold; }
  // Positions of the records whose fold is in [first, last].
  std::vector<std::size_t> indices_in_folds(int first, int last) const;
};

inline constexpr int kNumFolds = 10;
inline constexpr int kValidationFold = 9;
inline constexpr int kTestFold = 10;

}  // namespace leadxfer::signal
