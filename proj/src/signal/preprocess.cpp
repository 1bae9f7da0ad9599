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

#include "leadxfer/signal/preprocess.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace leadxfer::signal {

EcgRecord select_lead(const EcgRecord& record, std::size_t lead_index) {
  if (lead_index >= record.n_leads) {
    throw std::out_of_range("select_lead: lead " + std::to_string(lead_index) + " out of range for " +
                            std::to_string(record.n_leads) + "-lead record '" + record.id + "'");
  }
  EcgRecord out;
  out.id = record.id;
  out.sampling_rate_hz = record.sampling_rate_hz;
  out.n_leads = 1;
  out.length = record.length;
  auto row = record.lead(lead_index);
  out.samples.assign(row.begin(), row.end());
  out.labels = record.labels;
  return out;
}

EcgRecord fix_length(const EcgRecord& record, std::size_t target_len) {
  if (target_len == 0) throw std::invalid_argument("fix_length: target length must be positive");
  EcgRecord out = record;
  out.length = target_len;
  out.samples.assign(record.n_leads * target_len, 0.0f);
  const std::size_t offset = record.length > target_len ? (record.length - target_len) / 2 : 0;
  const std::size_t copy = std::min(record.length, target_len);
  for (std::size_t l = 0; l < record.n_leads; ++l) {
    auto src = record.lead(l).subspan(offset, copy);
    std::copy(src.begin(), src.end(), out.lead(l).begin());
  }
  return out;
}

StackedRecords stack_records(const Dataset& dataset, std::span<const std::size_t> indices,
                             std::optional<std::size_t> lead) {
  StackedRecords out;
  out.n = indices.size();
  out.n_leads = lead ? 1 : dataset.manifest.n_leads;
  out.length = dataset.manifest.length;
  out.n_classes = dataset.manifest.n_classes();
  out.samples.reserve(out.n * out.n_leads * out.length);
  out.labels.reserve(out.n * out.n_classes);
  for (auto i : indices) {
    const EcgRecord& src = dataset.records.at(i);
    if (src.labels.size() != out.n_classes) {
      throw std::invalid_argument("stack_records: record '" + src.id + "' has the wrong label count");
    }
    EcgRecord r = lead ? select_lead(src, *lead) : src;
    if (r.n_leads != out.n_leads) {
      throw std::invalid_argument("stack_records: record '" + src.id + "' has " + std::to_string(r.n_leads) +
                                  " leads, expected " + std::to_string(out.n_leads));
    }
    if (r.length != out.length) r = fix_length(r, out.length);
    out.samples.insert(out.samples.end(), r.samples.begin(), r.samples.end());
    out.labels.insert(out.labels.end(), r.labels.begin(), r.labels.end());
  }
  return out;
}

}  // namespace leadxfer::signal
