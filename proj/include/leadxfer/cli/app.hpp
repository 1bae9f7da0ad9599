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

#include <iosfwd>

#include "leadxfer/cli/run_config.hpp"

namespace leadxfer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Runs one subcommand. Throws ConfigError for configuration problems (missing
// or conflicting paths included); other exceptions are runtime failures.
void dispatch(const RunConfig& config, std::ostream& out);

// Parses argv, dispatches, and maps failures to exit codes with a diagnostic
// on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace leadxfer::cli
