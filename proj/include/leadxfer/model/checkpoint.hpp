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

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "leadxfer/autodiff/tensor.hpp"
#include "leadxfer/model/backbone.hpp"

namespace leadxfer::model {

// Binary checkpoint container, all integers little-endian:
//
//   "LXFRCKPT"  u32 version  u64 meta_len  meta (UTF-8 JSON)
//   u32 n_tensors, then per tensor:
//   u32 name_len  name  u32 rank  u64 dims[rank]  float32 data[prod(dims)]
//
// Tensors are written in name order, so encoding is a pure function of content.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBlob {
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, ad::Tensor> tensors;
};

std::vector<char> encode_checkpoint(const CheckpointBlob& blob);
CheckpointBlob decode_checkpoint(std::span<const char> bytes);  // throws FormatError

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointBlob& blob);
CheckpointBlob read_checkpoint_file(const std::filesystem::path& path);

// Model parameters under "param:" / "buffer:" prefixes, config under metadata["backbone"].
void store_params(const ModelParams& params, CheckpointBlob& blob);
ModelParams restore_params(const CheckpointBlob& blob);

}  // namespace leadxfer::model
