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

#include "leadxfer/signal/ecg_record.hpp"

#include <stdexcept>

namespace leadxfer::signal {

void EcgRecord::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("record '" + id + "': " + what);
  };
  if (n_leads != 1 && n_leads != 12) fail("n_leads must be 1 or 12, got " + std::to_string(n_leads));
  if (length == 0) fail("length must be positive");
  if (sampling_rate_hz <= 0) fail("sampling rate must be positive");
  if (samples.size() != n_leads * length) fail("sample buffer does not match n_leads x length");
  for (auto y : labels) {
    if (y > 1) fail("labels must be 0/1");
  }
}

std::map<std::string, int> DatasetManifest::fold_of() const {
  std::map<std::string, int> out;
  for (const auto& r : records) out[r.id] = r.fold;
  return out;
}

std::vector<std::size_t> Dataset::indices_in_folds(int first, int last) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    int f = manifest.records[i].fold;
    if (f >= first && f <= last) out.push_back(i);
  }
  return out;
}

}  // namespace leadxfer::signal
