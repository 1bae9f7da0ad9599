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

#include "leadxfer/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/bank/memory_bank.hpp"
#include "leadxfer/eval/metrics.hpp"
#include "leadxfer/loss/losses.hpp"
#include "leadxfer/model/checkpoint.hpp"
#include "leadxfer/model/inference.hpp"
#include "leadxfer/signal/preprocess.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::train {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const nlohmann::json& j, const char* key) {
  const auto s = j.at(key).get<std::string>();
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size() || s.size() != 16) throw FormatError(std::string("checkpoint: bad ") + key);
  return v;
}

}  // namespace

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  model::CheckpointBlob blob;
  model::store_params(ckpt.model, blob);
  auto& meta = blob.metadata;
  meta["stage"] = ckpt.stage;
  meta["train"] = ckpt.train.to_json();
  meta["epoch"] = ckpt.epoch;
  meta["val_auc"] = ckpt.val_auc ? nlohmann::json(*ckpt.val_auc) : nlohmann::json(nullptr);
  meta["init_fingerprint"] = hex64(ckpt.init_fingerprint);
  meta["teacher_fingerprint"] =
      ckpt.teacher_fingerprint ? nlohmann::json(hex64(*ckpt.teacher_fingerprint)) : nlohmann::json(nullptr);
  if (ckpt.student_bank) blob.tensors["bank:student"] = *ckpt.student_bank;
  if (ckpt.teacher_bank) blob.tensors["bank:teacher"] = *ckpt.teacher_bank;
  return model::encode_checkpoint(blob);
}

Checkpoint decode_checkpoint(std::span<const char> bytes) {
  auto blob = model::decode_checkpoint(bytes);
  Checkpoint out;
  try {
    const auto& meta = blob.metadata;
    out.model = model::restore_params(blob);
    out.stage = meta.at("stage").get<std::string>();
    out.train = TrainConfig::from_json(meta.at("train"));
    out.epoch = meta.at("epoch").get<int>();
    if (!meta.at("val_auc").is_null()) out.val_auc = meta.at("val_auc").get<double>();
    out.init_fingerprint = parse_hex64(meta, "init_fingerprint");
    if (!meta.at("teacher_fingerprint").is_null()) out.teacher_fingerprint = parse_hex64(meta, "teacher_fingerprint");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  if (auto it = blob.tensors.find("bank:student"); it != blob.tensors.end()) out.student_bank = it->second;
  if (auto it = blob.tensors.find("bank:teacher"); it != blob.tensors.end()) out.teacher_bank = it->second;
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_checkpoint(bytes);
}

nlohmann::json EpochLog::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["components"] = {{"bce", bce}, {"mkd", mkd}, {"clt", clt}};
  j["val_auc"] = val_auc ? nlohmann::json(*val_auc) : nlohmann::json(nullptr);
  return j;
}

namespace {

// Teacher outputs over the training rows, computed once: the teacher is frozen
// and its eval-mode forward is a pure function of the input.
struct TeacherTargets {
  const model::Inference* outputs = nullptr;
  std::size_t n_classes = 0;
  std::size_t proj_dim = 0;
};

struct FitSpec {
  std::string stage;
  std::optional<std::size_t> lead;
  std::optional<TeacherTargets> teacher;
};

std::optional<double> validation_auc(model::ModelParams& params, const signal::StackedRecords& val) {
  if (val.n == 0) return std::nullopt;
  auto inf = model::infer(params, val.samples, val.n, val.length, false);
  eval::Predictions p;
  p.n = val.n;
  p.c = val.n_classes;
  p.scores.assign(inf.probs.begin(), inf.probs.end());
  p.labels = val.labels;
  const double auc = eval::macro_roc_auc(p).macro;
  if (std::isnan(auc)) return std::nullopt;
  return auc;
}

model::ModelParams initial_student(const TrainConfig& config, const model::BackboneConfig& arch) {
  if (config.student_init.empty()) return model::build_backbone(arch, derive_seed(config.seed, "init"));
  Checkpoint init = load_checkpoint(config.student_init);
  if (!(init.model.config == arch)) {
    throw ConfigError("student_init", "checkpoint architecture " + init.model.config.to_json().dump() +
                                          " does not match " + arch.to_json().dump());
  }
  init.model.zero_grad();
  return std::move(init.model);
}

TrainResult fit(const TrainConfig& config, model::ModelParams model,
                const FitSpec& spec, const signal::StackedRecords& train, const signal::StackedRecords& val,
                const LogSink& sink) {
  TrainResult result;
  Checkpoint& best = result.checkpoint;
  model.set_trainable(true);
  model.zero_grad();
  best.stage = spec.stage;
  best.train = config;
  best.init_fingerprint = model.fingerprint();
  best.model = model;

  const std::size_t n = train.n;
  const std::size_t per_record = train.n_leads * train.length;
  const std::size_t c = train.n_classes;
  const auto hyper = config.adam();
  AdamState adam;
  long step = 0;

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng negative_rng(derive_seed(config.seed, "negatives"));
  std::optional<bank::MemoryBank> student_bank, teacher_bank;
  std::size_t n_negatives = 0;
  if (spec.teacher) {
    const std::size_t dim = model.config.proj_dim;
    student_bank.emplace(n, derive_seed(config.seed, "student_bank"), config.bank_momentum, dim);
    teacher_bank.emplace(n, derive_seed(config.seed, "teacher_bank"), config.bank_momentum, dim);
    if (n <= config.batch_size) {
      throw ConfigError("negatives", "training set of " + std::to_string(n) +
                                         " records leaves no negatives for batch size " +
                                         std::to_string(config.batch_size));
    }
    n_negatives = std::min(config.negatives, n - config.batch_size);
    best.student_bank = student_bank->to_tensor();
    best.teacher_bank = teacher_bank->to_tensor();
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  bool have_best = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double sum_loss = 0, sum_bce = 0, sum_mkd = 0, sum_clt = 0;
    std::size_t seen = 0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, n - start);
      if (b < 2) break;  // batch norm needs two samples
      std::span<const std::size_t> idx(order.data() + start, b);

      std::vector<float> xs(b * per_record);
      std::vector<float> ys(b * c);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy_n(train.samples.begin() + static_cast<std::ptrdiff_t>(idx[r] * per_record), per_record,
                    xs.begin() + static_cast<std::ptrdiff_t>(r * per_record));
        for (std::size_t k = 0; k < c; ++k) ys[r * c + k] = train.labels[idx[r] * c + k];
      }

      ad::Tape tape;
      auto x = tape.constant({b, train.n_leads, train.length}, std::move(xs));
      auto y = tape.constant({b, c}, std::move(ys));
      auto out = model::forward(tape, model, x, model::Mode::kTrain);
      auto bce = loss::bce_loss(out.probs, y);
      ad::Var total = bce;
      double mkd_value = 0, clt_value = 0;
      std::vector<float> student_emb;
      std::vector<float> teacher_emb;

      if (spec.teacher) {
        const auto& t = *spec.teacher;
        std::vector<float> tp(b * c);
        teacher_emb.resize(b * t.proj_dim);
        for (std::size_t r = 0; r < b; ++r) {
          std::copy_n(t.outputs->probs.begin() + static_cast<std::ptrdiff_t>(idx[r] * c), c,
                      tp.begin() + static_cast<std::ptrdiff_t>(r * c));
          std::copy_n(t.outputs->embeddings.begin() + static_cast<std::ptrdiff_t>(idx[r] * t.proj_dim), t.proj_dim,
                      teacher_emb.begin() + static_cast<std::ptrdiff_t>(r * t.proj_dim));
        }
        auto p_teacher = tape.constant({b, c}, std::move(tp));
        auto mkd = loss::mkd_loss(p_teacher, out.probs, config.weights.tau_kd);
        auto s_emb = model::project(tape, model, out.rep);
        auto t_emb = tape.constant({b, t.proj_dim}, teacher_emb);
        auto clt = loss::clt_loss(s_emb, t_emb, *student_bank, *teacher_bank, idx, n_negatives, config.weights.tau,
                                  negative_rng);
        total = loss::combined_loss(bce, mkd, clt, config.weights);
        mkd_value = mkd.item();
        clt_value = clt.item();
        auto sv = s_emb.value();
        student_emb.assign(sv.begin(), sv.end());
      } else if (!std::isfinite(bce.item())) {
        throw std::domain_error("non-finite loss term 'bce'");
      }

      const double loss_value = total.item();
      model.zero_grad();
      tape.backward(total);
      adam_step(model.params, adam, hyper, ++step);
      if (spec.teacher) {
        student_bank->update(idx, student_emb);
        teacher_bank->update(idx, teacher_emb);
      }

      sum_loss += loss_value * static_cast<double>(b);
      sum_bce += bce.item() * static_cast<double>(b);
      sum_mkd += mkd_value * static_cast<double>(b);
      sum_clt += clt_value * static_cast<double>(b);
      seen += b;
    }

    EpochLog log;
    log.stage = spec.stage;
    log.epoch = epoch;
    if (seen) {
      const double d = static_cast<double>(seen);
      log.train_loss = sum_loss / d;
      log.bce = sum_bce / d;
      log.mkd = sum_mkd / d;
      log.clt = sum_clt / d;
    }
    log.val_auc = validation_auc(model, val);
    if (sink) sink(log);
    result.log.push_back(log);

    const bool better = !have_best || (log.val_auc && (!best.val_auc || *log.val_auc > *best.val_auc));
    if (better) {
      have_best = true;
      best.model = model;
      best.epoch = epoch;
      best.val_auc = log.val_auc;
      if (spec.teacher) {
        best.student_bank = student_bank->to_tensor();
        best.teacher_bank = teacher_bank->to_tensor();
      }
    }
  }
  best.model.zero_grad();
  for (auto& [name, p] : best.model.params) p.grad.clear();
  return result;
}

model::BackboneConfig arch_for(const model::BackboneConfig& backbone, std::size_t in_leads, std::size_t n_classes) {
  model::BackboneConfig arch = backbone;
  arch.in_leads = in_leads;
  arch.n_classes = n_classes;
  arch.validate();
  return arch;
}

void require_classes(const signal::Dataset& dataset) {
  if (dataset.manifest.n_classes() == 0) throw ConfigError("label_names", "dataset has no classes");
}

void require_lead(const signal::Dataset& dataset, const TrainConfig& config) {
  if (config.student_lead >= dataset.manifest.n_leads) {
    throw ConfigError("student_lead", "lead " + std::to_string(config.student_lead) + " out of range for " +
                                          std::to_string(dataset.manifest.n_leads) + "-lead data");
  }
}

}  // namespace

TrainResult train_teacher(const signal::Dataset& dataset, const TrainConfig& config,
                          const model::BackboneConfig& backbone, const LogSink& sink) {
  config.validate();
  require_classes(dataset);
  if (dataset.manifest.n_leads != 12) {
    throw ConfigError("n_leads", "teacher training needs 12-lead data, got " +
                                     std::to_string(dataset.manifest.n_leads) + " leads");
  }
  const auto arch = arch_for(backbone, 12, dataset.manifest.n_classes());
  const auto train_idx = dataset.indices_in_folds(1, signal::kValidationFold - 1);
  const auto val_idx = dataset.indices_in_folds(signal::kValidationFold, signal::kValidationFold);
  const auto train = signal::stack_records(dataset, train_idx);
  const auto val = signal::stack_records(dataset, val_idx);
  FitSpec spec{"teacher", std::nullopt, std::nullopt};
  return fit(config, model::build_backbone(arch, derive_seed(config.seed, "init")), spec, train, val, sink);
}

TrainResult train_student(const signal::Dataset& dataset, const TrainConfig& config,
                          const model::BackboneConfig& backbone, const LogSink& sink) {
  config.validate();
  require_classes(dataset);
  require_lead(dataset, config);
  const auto arch = arch_for(backbone, 1, dataset.manifest.n_classes());
  const auto train_idx = dataset.indices_in_folds(1, signal::kValidationFold - 1);
  const auto val_idx = dataset.indices_in_folds(signal::kValidationFold, signal::kValidationFold);
  const auto train = signal::stack_records(dataset, train_idx, config.student_lead);
  const auto val = signal::stack_records(dataset, val_idx, config.student_lead);
  FitSpec spec{"student", config.student_lead, std::nullopt};
  return fit(config, initial_student(config, arch), spec, train, val, sink);
}

TrainResult distill_student(const signal::Dataset& dataset, const Checkpoint& teacher, const TrainConfig& config,
                            const model::BackboneConfig& backbone, const LogSink& sink) {
  config.validate();
  require_classes(dataset);
  require_lead(dataset, config);
  const auto& tcfg = teacher.model.config;
  if (tcfg.in_leads != 12) throw ConfigError("teacher", "teacher must be a 12-lead model");
  if (dataset.manifest.n_leads != 12) throw ConfigError("n_leads", "distillation needs 12-lead data");
  if (tcfg.n_classes != dataset.manifest.n_classes()) {
    throw ConfigError("teacher", "teacher predicts " + std::to_string(tcfg.n_classes) + " classes, dataset has " +
                                     std::to_string(dataset.manifest.n_classes()));
  }
  const auto arch = arch_for(backbone, 1, dataset.manifest.n_classes());
  if (arch.proj_dim != tcfg.proj_dim) {
    throw ConfigError("proj_dim", "student projection width " + std::to_string(arch.proj_dim) +
                                      " differs from the teacher's " + std::to_string(tcfg.proj_dim));
  }

  const auto train_idx = dataset.indices_in_folds(1, signal::kValidationFold - 1);
  const auto val_idx = dataset.indices_in_folds(signal::kValidationFold, signal::kValidationFold);

  model::ModelParams frozen = teacher.model;
  frozen.set_trainable(false);
  const std::uint64_t teacher_hash = frozen.fingerprint();
  model::Inference targets;
  {
    const auto full = signal::stack_records(dataset, train_idx);
    targets = model::infer(frozen, full.samples, full.n, full.length, true);
  }
  if (frozen.fingerprint() != teacher_hash) throw std::logic_error("teacher parameters changed during distillation");

  const auto train = signal::stack_records(dataset, train_idx, config.student_lead);
  const auto val = signal::stack_records(dataset, val_idx, config.student_lead);
  FitSpec spec{"distill", config.student_lead, TeacherTargets{&targets, tcfg.n_classes, tcfg.proj_dim}};
  auto result = fit(config, initial_student(config, arch), spec, train, val, sink);
  result.checkpoint.teacher_fingerprint = teacher_hash;
  return result;
}

}  // namespace leadxfer::train
