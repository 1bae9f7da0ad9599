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

#include "leadxfer/signal/synth.hpp"

#include <cmath>
#include <cstdio>

#include "leadxfer/signal/folds.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::signal {

namespace {

// Per-latent bump amplitudes (P, QRS, T).
constexpr double kAmplitude[kSynthLatents][3] = {
    {0.15, 1.00, 0.30},
    {0.10, 0.70, 0.25},
    {0.08, 0.50, 0.35},
};
// Bump widths (seconds) and onsets relative to the R peak, scaled by sqrt(RR).
constexpr double kSigmaP = 0.025, kSigmaQrs = 0.018, kSigmaT = 0.045;
constexpr double kOffsetP = -0.16, kOffsetT = 0.30;
constexpr double kStBegin = 0.06, kStEnd = 0.22;

double bump(double t, double center, double sigma) {
  const double z = (t - center) / sigma;
  return z * z > 50.0 ? 0.0 : std::exp(-0.5 * z * z);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_records == 0) throw ConfigError("n_records", "must be positive");
  if (length == 0) throw ConfigError("length", "must be positive");
  if (sampling_rate_hz <= 0) throw ConfigError("sampling_rate_hz", "must be positive");
  for (double p : label_prevalence) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("label_prevalence", "entries must lie in [0, 1)");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma", "must be non-negative");
  if (!(mixing_bound >= 0.0 && mixing_bound < 1.0)) throw ConfigError("mixing_bound", "must lie in [0, 1)");
  if (hidden_rows > kSynthLeads) throw ConfigError("hidden_rows", "at most 12");
  if (!(normal_hr_min > 0 && normal_hr_min <= normal_hr_max)) throw ConfigError("normal_hr_min", "bad range");
  if (!(tachy_hr_min > 0 && tachy_hr_min <= tachy_hr_max)) throw ConfigError("tachy_hr_min", "bad range");
  if (!(visible_min >= 0 && visible_min <= visible_max && visible_max < 1.0)) {
    throw ConfigError("visible_min", "bad range");
  }
}

std::vector<std::string> synth_label_names() {
  return {"tachycardia", "st_depression", "t_inversion", "extra_qrs"};
}

MixingMatrix synth_mixing_matrix(const SynthConfig& config) {
  Rng rng(derive_seed(config.mixing_seed, "mixing"));
  MixingMatrix a{};
  for (std::size_t r = 0; r < kSynthLeads; ++r) {
    const bool hidden = r < config.hidden_rows;
    const double lo = hidden ? 0.5 * config.mixing_bound : config.visible_min;
    const double hi = hidden ? config.mixing_bound : config.visible_max;
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double w2 = sign * rng.uniform(lo, hi);
    double w0 = rng.normal();
    double w1 = rng.normal();
    const double rest = std::sqrt(1.0 - w2 * w2) / std::hypot(w0, w1);
    a[r] = {w0 * rest, w1 * rest, w2};
  }
  return a;
}

RecordDraw synth_draw(const SynthConfig& config, std::size_t index) {
  Rng rng(derive_seed(config.record_seed, "record", index));
  RecordDraw d;
  for (std::size_t j = 0; j < kSynthClasses; ++j) {
    d.labels[j] = rng.uniform() < config.label_prevalence[j] ? 1 : 0;
  }
  d.normal_hr_bpm = rng.uniform(config.normal_hr_min, config.normal_hr_max);
  d.tachy_hr_bpm = rng.uniform(config.tachy_hr_min, config.tachy_hr_max);
  d.phase = rng.uniform();
  const double duration = static_cast<double>(config.length) / config.sampling_rate_hz;
  d.extra_qrs_time_s = rng.uniform(0.0, duration);
  return d;
}

std::vector<double> synth_latents(const SynthConfig& config, const RecordDraw& draw) {
  const std::size_t n = config.length;
  const double fs = config.sampling_rate_hz;
  const double duration = static_cast<double>(n) / fs;
  const double hr = draw.labels[0] ? draw.tachy_hr_bpm : draw.normal_hr_bpm;
  const double rr = 60.0 / hr;
  const double scale = std::sqrt(rr);
  const double t_sign = draw.labels[2] ? -1.0 : 1.0;

  std::vector<double> out(kSynthLatents * n, 0.0);
  // Beats from one period before the window to one after, so edges stay smooth.
  for (double r_peak = (draw.phase - 1.0) * rr; r_peak < duration + rr; r_peak += rr) {
    const double tp = r_peak + kOffsetP * scale;
    const double tt = r_peak + kOffsetT * scale;
    const double st0 = r_peak + kStBegin * scale;
    const double st1 = r_peak + kStEnd * scale;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      if (t < tp - 6 * kSigmaP || t > tt + 6 * kSigmaT) continue;
      const double p = bump(t, tp, kSigmaP);
      const double q = bump(t, r_peak, kSigmaQrs);
      const double tw = bump(t, tt, kSigmaT);
      for (std::size_t c = 0; c < kSynthLatents; ++c) {
        out[c * n + i] += kAmplitude[c][0] * p + kAmplitude[c][1] * q + t_sign * kAmplitude[c][2] * tw;
      }
      if (draw.labels[1] && t >= st0 && t < st1) out[2 * n + i] += config.st_offset;
    }
  }
  if (draw.labels[3]) {
    for (std::size_t i = 0; i < n; ++i) {
      const double q = bump(static_cast<double>(i) / fs, draw.extra_qrs_time_s, kSigmaQrs);
      for (std::size_t c = 0; c < kSynthLatents; ++c) out[c * n + i] += kAmplitude[c][1] * q;
    }
  }
  return out;
}

EcgRecord synth_render(const SynthConfig& config, const MixingMatrix& mixing, const RecordDraw& draw,
                       std::size_t index) {
  const std::size_t n = config.length;
  const auto latents = synth_latents(config, draw);
  EcgRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "syn%05zu", index);
  rec.id = id;
  rec.sampling_rate_hz = config.sampling_rate_hz;
  rec.n_leads = kSynthLeads;
  rec.length = n;
  rec.samples.resize(kSynthLeads * n);
  rec.labels.assign(draw.labels.begin(), draw.labels.end());

  Rng noise(derive_seed(config.noise_seed, "noise", index));
  for (std::size_t l = 0; l < kSynthLeads; ++l) {
    auto row = rec.lead(l);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t c = 0; c < kSynthLatents; ++c) v += mixing[l][c] * latents[c * n + i];
      if (config.noise_sigma > 0.0) v += config.noise_sigma * noise.normal();
      row[i] = static_cast<float>(v);
    }
  }
  return rec;
}

Dataset synth_generate(const SynthConfig& config) {
  config.validate();
  const auto mixing = synth_mixing_matrix(config);
  Dataset ds;
  ds.manifest.label_names = synth_label_names();
  ds.manifest.sampling_rate_hz = config.sampling_rate_hz;
  ds.manifest.n_leads = kSynthLeads;
  ds.manifest.length = config.length;

  std::vector<std::vector<std::uint8_t>> labels;
  for (std::size_t i = 0; i < config.n_records; ++i) {
    ds.records.push_back(synth_render(config, mixing, synth_draw(config, i), i));
    labels.push_back(ds.records.back().labels);
  }
  std::vector<int> folds(config.n_records, 1);
  if (config.n_records >= static_cast<std::size_t>(kNumFolds)) {
    folds = stratified_folds(labels, kNumFolds, derive_seed(config.record_seed, "folds"));
  }
  for (std::size_t i = 0; i < config.n_records; ++i) {
    ds.manifest.records.push_back(
        {ds.records[i].id, ds.records[i].id + ".f32", kSynthLeads, config.length, folds[i]});
  }
  return ds;
}

}  // namespace leadxfer::signal
