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

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "leadxfer/signal/ecg_record.hpp"

namespace leadxfer::signal {

inline constexpr std::size_t kSynthLeads = 12;
inline constexpr std::size_t kSynthLatents = 3;
inline constexpr std::size_t kSynthClasses = 4;

// Deterministic 12-lead generator. Three latent channels carry trains of
// Gaussian P/QRS/T bumps; leads are fixed unit-norm mixtures of them. The
// first `hidden_rows` leads weight latent 2 by at most `mixing_bound`, so the
// ST offset of label 1 (applied to latent 2 only) is nearly invisible there.
//
// Labels: 0 tachycardia (rate drawn from the tachy range), 1 ST offset on
// latent 2, 2 T-wave inversion in every latent, 3 one extra QRS bump.
struct SynthConfig {
  std::size_t n_records = 2500;
  std::size_t length = 1000;
  int sampling_rate_hz = 100;
  std::array<double, kSynthClasses> label_prevalence{0.3, 0.3, 0.3, 0.3};
  double noise_sigma = 0.1;
  std::uint64_t mixing_seed = 1;
  std::uint64_t record_seed = 2;
  std::uint64_t noise_seed = 3;

  // Waveform constants.
  double normal_hr_min = 50.0, normal_hr_max = 110.0;
  double tachy_hr_min = 120.0, tachy_hr_max = 160.0;
  double st_offset = -0.2;
  double mixing_bound = 0.05;
  std::size_t hidden_rows = 6;
  double visible_min = 0.5, visible_max = 0.9;  // |weight| of latent 2 in the other rows

  // Throws ConfigError naming the field.
  void validate() const;
};

std::vector<std::string> synth_label_names();

using MixingMatrix = std::array<std::array<double, kSynthLatents>, kSynthLeads>;

// Rows are L2-normalised. Hidden rows have |A[r][2]| in [bound/2, bound].
MixingMatrix synth_mixing_matrix(const SynthConfig& config);

// Per-record random draws. Every field is drawn for every record so that the
// stream stays aligned whatever the labels turn out to be.
struct RecordDraw {
  std::array<std::uint8_t, kSynthClasses> labels{};
  double normal_hr_bpm = 0.0;
  double tachy_hr_bpm = 0.0;
  double phase = 0.0;          // fraction of one beat period before the first R peak
  double extra_qrs_time_s = 0.0;
};

RecordDraw synth_draw(const SynthConfig& config, std::size_t index);

// Latent channels [3 x length] for a draw, without noise.
std::vector<double> synth_latents(const SynthConfig& config, const RecordDraw& draw);

// Full record: mixing, then i.i.d. Gaussian noise from the noise stream of `index`.
EcgRecord synth_render(const SynthConfig& config, const MixingMatrix& mixing, const RecordDraw& draw,
                       std::size_t index);

// Manifest, records and stratified folds.
Dataset synth_generate(const SynthConfig& config);

}  // namespace leadxfer::signal
