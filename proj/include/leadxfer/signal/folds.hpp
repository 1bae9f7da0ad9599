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
#include <vector>

namespace leadxfer::signal {

// Iterative multi-label stratification into k folds (returned as 1..k).
//
// Records are placed label by label, rarest remaining label first; each goes
// to the fold with the largest outstanding demand for that label among folds
// that still have capacity, lowest fold index on ties. Records without any
// positive label are stratified as one extra "no finding" column. Capacities
// are fixed up front, so fold sizes differ by at most one. `seed` only
// permutes the order in which records of one label are visited.
std::vector<int> stratified_folds(const std::vector<std::vector<std::uint8_t>>& labels,
                                  int k = 10, std::uint64_t seed = 0);

}  // namespace leadxfer::signal
