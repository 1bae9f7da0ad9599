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

#include <filesystem>
#include <vector>

#include "leadxfer/signal/ecg_record.hpp"

namespace leadxfer::signal {

// ECGPACK directory: manifest.json plus one little-endian float32 binary per
// record (lead-major, 4 * n_leads * length bytes).
//
// Errors (FormatError) name the offending record id: missing manifest,
// absent binary, byte-length mismatch, fold outside 1..10.
Dataset load_pack(const std::filesystem::path& dir);

// Creates `dir` if needed; every file is written to a temporary and renamed.
void save_pack(const DatasetManifest& manifest, const std::vector<EcgRecord>& records,
               const std::filesystem::path& dir);

inline void save_pack(const Dataset& dataset, const std::filesystem::path& dir) {
  save_pack(dataset.manifest, dataset.records, dir);
}

}  // namespace leadxfer::signal
