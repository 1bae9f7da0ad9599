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

#include "leadxfer/signal/ecg_record.hpp"

namespace leadxfer::signal {

// Single-lead view of `record`. Throws std::out_of_range for a bad index.
EcgRecord select_lead(const EcgRecord& record, std::size_t lead_index);

// Center-crops longer records and zero-pads shorter ones at the end.
EcgRecord fix_length(const EcgRecord& record, std::size_t target_len);

// Records gathered into one contiguous block for batching.
struct StackedRecords {
  std::size_t n = 0;
  std::size_t n_leads = 0;
  std::size_t length = 0;
  std::size_t n_classes = 0;
  std::vector<float> samples;        // [n x n_leads x length]
  std::vector<std::uint8_t> labels;  // [n x n_classes]
};

// Stacks dataset.records[indices], fixed to the manifest length. With `lead`
// set, only that lead is kept.
StackedRecords stack_records(const Dataset& dataset, std::span<const std::size_t> indices,
                             std::optional<std::size_t> lead = std::nullopt);

}  // namespace leadxfer::signal
