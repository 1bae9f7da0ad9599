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

#include "leadxfer/cli/run_config.hpp"

#include <cmath>
#include <limits>

#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"

namespace leadxfer::cli {

using nlohmann::json;

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = [] {
    const signal::SynthConfig s;
    const model::BackboneConfig b;
    const train::TrainConfig t;
    json all_leads = json::array();
    for (std::size_t i = 0; i < 12; ++i) all_leads.push_back(i);
    return std::vector<KeySpec>{
        // paths and selection
        {"data", Kind::kString, "", "dataset pack directory"},
        {"teacher", Kind::kString, "", "teacher checkpoint"},
        {"ckpt", Kind::kString, "", "checkpoint to evaluate or export"},
        {"out", Kind::kString, "", "output file or directory"},
        {"fold", Kind::kUInt, 10, "fold to evaluate"},
        {"lead", Kind::kOptUInt, nullptr, "input lead of a single-lead model"},
        {"leads", Kind::kUIntList, all_leads, "leads for lead-sweep"},
        {"seeds", Kind::kUIntList, json::array(), "student seeds for sweeps and grids; empty = [seed]"},
        // synthetic data
        {"n_records", Kind::kUInt, s.n_records, ""},
        {"length", Kind::kUInt, s.length, "samples per lead"},
        {"sampling_rate_hz", Kind::kUInt, s.sampling_rate_hz, ""},
        {"label_prevalence", Kind::kNumberList, s.label_prevalence, "four values in [0, 1)"},
        {"noise_sigma", Kind::kNumber, s.noise_sigma, ""},
        {"mixing_seed", Kind::kUInt, s.mixing_seed, ""},
        {"record_seed", Kind::kUInt, s.record_seed, ""},
        {"noise_seed", Kind::kUInt, s.noise_seed, ""},
        {"normal_hr_min", Kind::kNumber, s.normal_hr_min, ""},
        {"normal_hr_max", Kind::kNumber, s.normal_hr_max, ""},
        {"tachy_hr_min", Kind::kNumber, s.tachy_hr_min, ""},
        {"tachy_hr_max", Kind::kNumber, s.tachy_hr_max, ""},
        {"st_offset", Kind::kNumber, s.st_offset, ""},
        {"mixing_bound", Kind::kNumber, s.mixing_bound, ""},
        {"hidden_rows", Kind::kUInt, s.hidden_rows, ""},
        {"visible_min", Kind::kNumber, s.visible_min, ""},
        {"visible_max", Kind::kNumber, s.visible_max, ""},
        // architecture
        {"stem_channels", Kind::kUInt, b.stem_channels, ""},
        {"n_blocks", Kind::kUInt, b.n_blocks, ""},
        {"kernel_size", Kind::kUInt, b.kernel_size, ""},
        {"stem_kernel", Kind::kUInt, b.stem_kernel, ""},
        {"proj_dim", Kind::kUInt, b.proj_dim, ""},
        // training
        {"epochs", Kind::kUInt, t.epochs, ""},
        {"batch_size", Kind::kUInt, t.batch_size, ""},
        {"learning_rate", Kind::kNumber, t.learning_rate, ""},
        {"adam_beta1", Kind::kNumber, t.adam_beta1, ""},
        {"adam_beta2", Kind::kNumber, t.adam_beta2, ""},
        {"adam_eps", Kind::kNumber, t.adam_eps, ""},
        {"alpha", Kind::kNumber, t.weights.alpha, "weight of the distillation term"},
        {"beta", Kind::kNumber, t.weights.beta, "weight of the contrastive term"},
        {"tau", Kind::kNumber, t.weights.tau, ""},
        {"tau_kd", Kind::kNumber, t.weights.tau_kd, ""},
        {"negatives", Kind::kUInt, t.negatives, ""},
        {"student_lead", Kind::kUInt, t.student_lead, ""},
        {"seed", Kind::kUInt, t.seed, ""},
        {"bank_momentum", Kind::kNumber, t.bank_momentum, ""},
        {"student_init", Kind::kString, "", "checkpoint to start the student from"},
    };
  }();
  return schema;
}

namespace {

const KeySpec& spec_of(const std::string& key) {
  for (const auto& s : config_schema()) {
    if (s.key == key) return s;
  }
  throw ConfigError(key, "unknown configuration key");
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kInt: return "an integer";
    case Kind::kUInt: return "a non-negative integer";
    case Kind::kNumber: return "a number";
    case Kind::kString: return "a string";
    case Kind::kOptUInt: return "a non-negative integer or null";
    case Kind::kUIntList: return "a list of non-negative integers";
    case Kind::kNumberList: return "a list of numbers";
  }
  return "?";
}

bool is_uint(const json& v) {
  if (v.is_number_unsigned()) return true;
  if (v.is_number_integer()) return v.get<std::int64_t>() >= 0;
  return false;
}

[[noreturn]] void mismatch(const std::string& path, Kind kind, const json& v) {
  throw ConfigError(path, std::string("expected ") + kind_name(kind) + ", got " + v.dump());
}

}  // namespace

json check_value(const std::string& key, const json& value) {
  const auto& spec = spec_of(key);
  switch (spec.kind) {
    case Kind::kInt:
      if (!value.is_number_integer()) mismatch(key, spec.kind, value);
      return value;
    case Kind::kUInt:
      if (!is_uint(value)) mismatch(key, spec.kind, value);
      return value.get<std::uint64_t>();
    case Kind::kNumber:
      if (!value.is_number() || !std::isfinite(value.get<double>())) mismatch(key, spec.kind, value);
      return value.get<double>();
    case Kind::kString:
      if (!value.is_string()) mismatch(key, spec.kind, value);
      return value;
    case Kind::kOptUInt:
      if (value.is_null()) return value;
      if (!is_uint(value)) mismatch(key, spec.kind, value);
      return value.get<std::uint64_t>();
    case Kind::kUIntList: {
      if (!value.is_array()) mismatch(key, spec.kind, value);
      json out = json::array();
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!is_uint(value[i])) mismatch(key + "[" + std::to_string(i) + "]", Kind::kUInt, value[i]);
        out.push_back(value[i].get<std::uint64_t>());
      }
      return out;
    }
    case Kind::kNumberList: {
      if (!value.is_array()) mismatch(key, spec.kind, value);
      json out = json::array();
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number()) mismatch(key + "[" + std::to_string(i) + "]", Kind::kNumber, value[i]);
        out.push_back(value[i].get<double>());
      }
      return out;
    }
  }
  return value;
}

json parse_flag_value(const std::string& key, const std::string& text) {
  const auto& spec = spec_of(key);
  if (spec.kind == Kind::kString) return text;
  if (spec.kind == Kind::kOptUInt && (text == "none" || text == "null" || text.empty())) return nullptr;
  if (spec.kind == Kind::kUIntList || spec.kind == Kind::kNumberList) {
    if (auto dots = text.find(".."); dots != std::string::npos && spec.kind == Kind::kUIntList) {
      const auto lo = parse_flag_value("fold", text.substr(0, dots));
      const auto hi = parse_flag_value("fold", text.substr(dots + 2));
      if (lo.get<std::uint64_t>() > hi.get<std::uint64_t>()) throw ConfigError(key, "empty range '" + text + "'");
      json out = json::array();
      for (auto i = lo.get<std::uint64_t>(); i <= hi.get<std::uint64_t>(); ++i) out.push_back(i);
      return out;
    }
    if (text.empty() || text.front() != '[') return check_value(key, json::parse("[" + text + "]", nullptr, false));
  }
  const json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError(key, std::string("expected ") + kind_name(spec.kind) + ", got '" + text + "'");
  return check_value(key, parsed);
}

RunConfig parse_config(const std::string& command, const std::filesystem::path& file,
                       const std::map<std::string, json>& overrides) {
  RunConfig rc;
  rc.command = command;
  rc.values = json::object();
  for (const auto& s : config_schema()) rc.values[s.key] = s.default_value;

  if (!file.empty()) {
    std::string text;
    try {
      text = read_text_file(file);
    } catch (const std::exception& e) {
      throw ConfigError("config", e.what());
    }
    // An empty file means "all defaults".
    const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    json j = blank ? json::object() : json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config", "malformed JSON in " + file.string());
    if (!j.is_object()) throw ConfigError("config", "top level of " + file.string() + " must be an object");
    for (const auto& [key, value] : j.items()) rc.values[key] = check_value(key, value);
  }
  for (const auto& [key, value] : overrides) rc.values[key] = check_value(key, value);

  // Validate the typed views now so bad values surface as config errors.
  rc.synth().validate();
  rc.backbone().validate();
  rc.train().validate();
  return rc;
}

signal::SynthConfig RunConfig::synth() const {
  signal::SynthConfig s;
  const auto& v = values;
  s.n_records = v.at("n_records").get<std::size_t>();
  s.length = v.at("length").get<std::size_t>();
  const auto rate = v.at("sampling_rate_hz").get<std::uint64_t>();
  if (rate > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw ConfigError("sampling_rate_hz", "too large");
  s.sampling_rate_hz = static_cast<int>(rate);
  const auto& prev = v.at("label_prevalence");
  if (prev.size() != s.label_prevalence.size()) {
    throw ConfigError("label_prevalence", "expected " + std::to_string(s.label_prevalence.size()) + " values");
  }
  for (std::size_t i = 0; i < prev.size(); ++i) s.label_prevalence[i] = prev[i].get<double>();
  s.noise_sigma = v.at("noise_sigma").get<double>();
  s.mixing_seed = v.at("mixing_seed").get<std::uint64_t>();
  s.record_seed = v.at("record_seed").get<std::uint64_t>();
  s.noise_seed = v.at("noise_seed").get<std::uint64_t>();
  s.normal_hr_min = v.at("normal_hr_min").get<double>();
  s.normal_hr_max = v.at("normal_hr_max").get<double>();
  s.tachy_hr_min = v.at("tachy_hr_min").get<double>();
  s.tachy_hr_max = v.at("tachy_hr_max").get<double>();
  s.st_offset = v.at("st_offset").get<double>();
  s.mixing_bound = v.at("mixing_bound").get<double>();
  s.hidden_rows = v.at("hidden_rows").get<std::size_t>();
  s.visible_min = v.at("visible_min").get<double>();
  s.visible_max = v.at("visible_max").get<double>();
  return s;
}

model::BackboneConfig RunConfig::backbone() const {
  model::BackboneConfig b;
  b.stem_channels = values.at("stem_channels").get<std::size_t>();
  b.n_blocks = values.at("n_blocks").get<std::size_t>();
  b.kernel_size = values.at("kernel_size").get<std::size_t>();
  b.stem_kernel = values.at("stem_kernel").get<std::size_t>();
  b.proj_dim = values.at("proj_dim").get<std::size_t>();
  return b;
}

train::TrainConfig RunConfig::train() const {
  train::TrainConfig t;
  const auto& v = values;
  const auto epochs = v.at("epochs").get<std::uint64_t>();
  if (epochs > 1000000) throw ConfigError("epochs", "too large");
  t.epochs = static_cast<int>(epochs);
  t.batch_size = v.at("batch_size").get<std::size_t>();
  t.learning_rate = v.at("learning_rate").get<double>();
  t.adam_beta1 = v.at("adam_beta1").get<double>();
  t.adam_beta2 = v.at("adam_beta2").get<double>();
  t.adam_eps = v.at("adam_eps").get<double>();
  t.weights.alpha = v.at("alpha").get<double>();
  t.weights.beta = v.at("beta").get<double>();
  t.weights.tau = v.at("tau").get<double>();
  t.weights.tau_kd = v.at("tau_kd").get<double>();
  t.negatives = v.at("negatives").get<std::size_t>();
  t.student_lead = v.at("student_lead").get<std::size_t>();
  t.seed = v.at("seed").get<std::uint64_t>();
  t.bank_momentum = v.at("bank_momentum").get<double>();
  t.student_init = v.at("student_init").get<std::string>();
  return t;
}

std::string RunConfig::path(const std::string& key) const { return values.at(key).get<std::string>(); }

std::optional<std::size_t> RunConfig::lead() const {
  const auto& v = values.at("lead");
  if (v.is_null()) return std::nullopt;
  return v.get<std::size_t>();
}

std::size_t RunConfig::fold() const { return values.at("fold").get<std::size_t>(); }

std::vector<std::size_t> RunConfig::leads() const { return values.at("leads").get<std::vector<std::size_t>>(); }

std::vector<std::uint64_t> RunConfig::seeds() const { return values.at("seeds").get<std::vector<std::uint64_t>>(); }

}  // namespace leadxfer::cli
