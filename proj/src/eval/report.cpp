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

#include "leadxfer/eval/report.hpp"

#include <cmath>
#include <cstdio>

#include "leadxfer/model/inference.hpp"
#include "leadxfer/signal/preprocess.hpp"
#include "leadxfer/util/errors.hpp"

namespace leadxfer::eval {

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::optional<std::size_t> input_lead(const train::Checkpoint& ckpt, const signal::Dataset& dataset,
                                      std::optional<std::size_t> lead) {
  const auto& cfg = ckpt.model.config;
  if (cfg.n_classes != dataset.manifest.n_classes()) {
    throw ConfigError("ckpt", "model predicts " + std::to_string(cfg.n_classes) + " classes, dataset has " +
                                  std::to_string(dataset.manifest.n_classes()));
  }
  if (cfg.in_leads == 1) {
    if (!lead) throw ConfigError("lead", "a single-lead model needs a lead index");
    if (*lead >= dataset.manifest.n_leads) {
      throw ConfigError("lead", "lead " + std::to_string(*lead) + " out of range for " +
                                    std::to_string(dataset.manifest.n_leads) + "-lead data");
    }
    return lead;
  }
  if (lead) throw ConfigError("lead", "the model reads all " + std::to_string(cfg.in_leads) + " leads");
  if (dataset.manifest.n_leads != cfg.in_leads) {
    throw ConfigError("n_leads", "model expects " + std::to_string(cfg.in_leads) + " leads, dataset has " +
                                     std::to_string(dataset.manifest.n_leads));
  }
  return std::nullopt;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["macro_auc"] = number_or_null(macro_auc);
  j["macro_f1"] = macro_f1;
  j["mean_accuracy"] = mean_accuracy;
  j["per_class"] = nlohmann::json::array();
  for (const auto& c : per_class) {
    j["per_class"].push_back(
        {{"label_name", c.label_name}, {"auc", c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr)}, {"f1", c.f1}});
  }
  j["n_records"] = n_records;
  j["lead_index"] = lead_index ? nlohmann::json(*lead_index) : nlohmann::json(nullptr);
  j["fold"] = fold;
  return j;
}

EvalReport make_report(const Predictions& p, const std::vector<std::string>& label_names, int fold,
                       std::optional<std::size_t> lead) {
  if (label_names.size() != p.c) throw std::invalid_argument("make_report: label names do not match class count");
  EvalReport r;
  const auto auc = macro_roc_auc(p);
  const auto f1 = f1_scores(p);
  r.macro_auc = auc.macro;
  r.macro_f1 = f1.macro;
  r.mean_accuracy = mean_accuracy(p);
  for (std::size_t j = 0; j < p.c; ++j) r.per_class.push_back({label_names[j], auc.per_class[j], f1.per_class[j]});
  r.n_records = p.n;
  r.lead_index = lead;
  r.fold = fold;
  return r;
}

Predictions predict_fold(const train::Checkpoint& ckpt, const signal::Dataset& dataset, int fold,
                         std::optional<std::size_t> lead) {
  if (fold < 1 || fold > signal::kNumFolds) throw ConfigError("fold", "must be in 1..10");
  const auto in_lead = input_lead(ckpt, dataset, lead);
  const auto idx = dataset.indices_in_folds(fold, fold);
  const auto stacked = signal::stack_records(dataset, idx, in_lead);
  model::ModelParams params = ckpt.model;
  const auto inf = model::infer(params, stacked.samples, stacked.n, stacked.length, false);
  Predictions p;
  p.n = stacked.n;
  p.c = stacked.n_classes;
  p.scores.assign(inf.probs.begin(), inf.probs.end());
  p.labels = stacked.labels;
  return p;
}

EvalReport evaluate(const train::Checkpoint& ckpt, const signal::Dataset& dataset, int fold,
                    std::optional<std::size_t> lead) {
  const auto p = predict_fold(ckpt, dataset, fold, lead);
  const auto in_lead = ckpt.model.config.in_leads == 1 ? lead : std::nullopt;
  return make_report(p, dataset.manifest.label_names, fold, in_lead);
}

std::string export_embeddings(const train::Checkpoint& ckpt, const signal::Dataset& dataset,
                              std::optional<std::size_t> lead) {
  const auto in_lead = input_lead(ckpt, dataset, lead);
  std::vector<std::size_t> idx(dataset.records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto stacked = signal::stack_records(dataset, idx, in_lead);
  model::ModelParams params = ckpt.model;
  const auto inf = model::infer(params, stacked.samples, stacked.n, stacked.length, true);
  const std::size_t dim = params.config.proj_dim;

  std::string out = "id,fold";
  for (std::size_t k = 0; k < dim; ++k) out += ",e" + std::to_string(k);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < stacked.n; ++i) {
    out += dataset.records[i].id + ',' + std::to_string(dataset.fold(i));
    for (std::size_t k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(inf.embeddings[i * dim + k]));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace leadxfer::eval
