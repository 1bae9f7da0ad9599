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
#include <json.hpp>
#include <map>
#include <string>

#include "leadxfer/autodiff/tape.hpp"

namespace leadxfer::model {

// Residual 1-D CNN family. Stem: conv(stem_kernel, stride 2) - BN - ReLU -
// maxpool(2). Each block is conv-BN-ReLU-conv-BN plus a skip (identity, or a
// 1x1 conv + BN when the shape changes), then ReLU. Channels double, with
// stride 2, at every second block starting from the third.
struct BackboneConfig {
  std::size_t in_leads = 12;
  std::size_t stem_channels = 32;
  std::size_t n_blocks = 4;
  std::size_t kernel_size = 5;
  std::size_t stem_kernel = 7;
  std::size_t n_classes = 4;
  std::size_t proj_dim = 128;

  // Channel count of the last block (the representation width D).
  std::size_t rep_dim() const;
  static bool downsamples(std::size_t block) { return block >= 2 && block % 2 == 0; }
  void validate() const;  // throws ConfigError

  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
  bool operator==(const BackboneConfig&) const = default;
};

// Trainable parameters plus batch-norm running statistics.
struct ModelParams {
  BackboneConfig config;
  std::map<std::string, ad::Tensor> params;
  std::map<std::string, ad::Tensor> buffers;

  ad::Tensor& param(const std::string& name);
  ad::Tensor& buffer(const std::string& name);

  std::size_t trainable_count() const;
  // FNV-1a over names, shapes and raw bytes of params and buffers.
  std::uint64_t fingerprint() const;
  void zero_grad();
  // Toggles requires_grad on every trainable parameter.
  void set_trainable(bool trainable);
};

// Deterministic initialisation: conv and affine weights ~ U(-1/sqrt(fan_in),
// 1/sqrt(fan_in)), biases 0, BN scale 1 / shift 0, running stats (0, 1).
ModelParams build_backbone(const BackboneConfig& config, std::uint64_t seed);

enum class Mode { kTrain, kEval };

struct ForwardResult {
  ad::Var rep;    // [B, D]
  ad::Var probs;  // [B, C]
};

// batch: [B, in_leads, L]. Train mode updates BN running statistics.
ForwardResult forward(ad::Tape& tape, ModelParams& params, ad::Var batch, Mode mode);

// Affine D -> proj_dim followed by row-wise L2 normalisation.
ad::Var project(ad::Tape& tape, ModelParams& params, ad::Var rep);

}  // namespace leadxfer::model
