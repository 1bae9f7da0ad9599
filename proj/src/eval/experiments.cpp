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

#include "leadxfer/eval/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace leadxfer::eval {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::uint64_t> seeds_of(const StudentRecipe& recipe) {
  return recipe.seeds.empty() ? std::vector<std::uint64_t>{recipe.config.seed} : recipe.seeds;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

StudentRun run_student(const signal::Dataset& dataset, const train::Checkpoint& teacher, const StudentRecipe& recipe,
                       std::size_t lead, std::uint64_t seed, double alpha, double beta) {
  train::TrainConfig cfg = recipe.config;
  cfg.student_lead = lead;
  cfg.seed = seed;
  cfg.weights.alpha = alpha;
  cfg.weights.beta = beta;
  StudentRun run;
  run.alpha = alpha;
  run.beta = beta;
  run.seed = seed;
  run.result = alpha == 0.0 && beta == 0.0 ? train::train_student(dataset, cfg, recipe.backbone, recipe.sink)
                                           : train::distill_student(dataset, teacher, cfg, recipe.backbone, recipe.sink);
  run.test = evaluate(run.result.checkpoint, dataset, signal::kTestFold, lead);
  return run;
}

std::vector<SweepRow> lead_sweep(const signal::Dataset& dataset, const train::Checkpoint& teacher,
                                 const StudentRecipe& recipe, const std::vector<std::size_t>& leads) {
  if (leads.empty()) throw std::invalid_argument("lead_sweep: empty lead list");
  const auto seeds = seeds_of(recipe);
  const auto& w = recipe.config.weights;
  std::vector<SweepRow> rows;
  for (auto lead : leads) {
    std::vector<double> base, mvkt;
    for (auto seed : seeds) {
      base.push_back(run_student(dataset, teacher, recipe, lead, seed, 0.0, 0.0).test.macro_auc);
      mvkt.push_back(run_student(dataset, teacher, recipe, lead, seed, w.alpha, w.beta).test.macro_auc);
    }
    rows.push_back({lead, median(base), median(mvkt), seeds.size()});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lead,baseline_auc,mvkt_auc,n_seeds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.lead) + fmt(",%.6f", r.baseline_auc) + fmt(",%.6f", r.mvkt_auc) + "," +
           std::to_string(r.n_seeds) + "\n";
  }
  return out;
}

std::string sweep_svg(const std::vector<SweepRow>& rows) {
  const double width = 640, height = 400, left = 60, right = 130, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double lo = 1.0, hi = 0.0;
  std::size_t max_lead = 0;
  for (const auto& r : rows) {
    for (double v : {r.baseline_auc, r.mvkt_auc}) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    max_lead = std::max(max_lead, r.lead);
  }
  if (lo > hi) lo = 0.0, hi = 1.0;
  lo = std::max(0.0, std::floor(lo * 20.0 - 1.0) / 20.0);
  hi = std::min(1.0, std::ceil(hi * 20.0 + 1.0) / 20.0);
  if (hi <= lo) hi = lo + 0.05;
  const double xspan = max_lead > 0 ? static_cast<double>(max_lead) : 1.0;
  auto px = [&](double lead) { return left + pw * lead / xspan; };
  auto py = [&](double auc) { return top + ph * (hi - auc) / (hi - lo); };

  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top + ph) + "\" x2=\"" + fmt("%.1f", left + pw) +
       "\" y2=\"" + fmt("%.1f", top + ph) + "\"/>\n";
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top) + "\" x2=\"" + fmt("%.1f", left) + "\" y2=\"" +
       fmt("%.1f", top + ph) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t l = 0; l <= max_lead; ++l) {
    s += "<text x=\"" + fmt("%.1f", px(static_cast<double>(l))) + "\" y=\"" + fmt("%.1f", top + ph + 16) +
         "\" text-anchor=\"middle\">" + std::to_string(l) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    s += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", py(v) + 4) + "\" text-anchor=\"end\">" +
         fmt("%.3f", v) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", height - 12) +
       "\" text-anchor=\"middle\">lead index</text>\n";
  s += "<text x=\"14\" y=\"" + fmt("%.1f", top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       fmt("%.1f", top + ph / 2) + ")\">test macro AUC</text>\n";
  s += "</g>\n";

  struct Series {
    const char* name;
    const char* color;
    double SweepRow::*field;
  };
  const Series series[] = {{"baseline", "#1f77b4", &SweepRow::baseline_auc}, {"MVKT", "#d62728", &SweepRow::mvkt_auc}};
  int slot = 0;
  for (const auto& sr : series) {
    std::string points;
    for (const auto& r : rows) {
      const double v = r.*sr.field;
      if (!std::isfinite(v)) continue;
      if (!points.empty()) points += ' ';
      points += fmt("%.2f", px(static_cast<double>(r.lead))) + "," + fmt("%.2f", py(v));
    }
    s += std::string("<polyline fill=\"none\" stroke=\"") + sr.color + "\" stroke-width=\"2\" points=\"" + points +
         "\"/>\n";
    for (const auto& r : rows) {
      const double v = r.*sr.field;
      if (!std::isfinite(v)) continue;
      s += "<circle cx=\"" + fmt("%.2f", px(static_cast<double>(r.lead))) + "\" cy=\"" + fmt("%.2f", py(v)) +
           "\" r=\"3\" fill=\"" + sr.color + "\"/>\n";
    }
    const double ly = top + 10 + 18 * slot++;
    s += "<line x1=\"" + fmt("%.1f", left + pw + 15) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
         fmt("%.1f", left + pw + 35) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + sr.color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.1f", left + pw + 40) + "\" y=\"" + fmt("%.1f", ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + sr.name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<GridRow> ablation_grid(const signal::Dataset& dataset, const train::Checkpoint& teacher,
                                   const StudentRecipe& recipe) {
  const double a = recipe.config.weights.alpha, b = recipe.config.weights.beta;
  struct Cell {
    const char* name;
    double alpha, beta;
  };
  const Cell cells[] = {{"BCE", 0, 0}, {"BCE+MKD", a, 0}, {"BCE+CLT", 0, b}, {"BCE+MKD+CLT", a, b}};
  std::vector<GridRow> rows;
  for (auto seed : seeds_of(recipe)) {
    for (const auto& cell : cells) {
      auto run = run_student(dataset, teacher, recipe, recipe.config.student_lead, seed, cell.alpha, cell.beta);
      rows.push_back({cell.name, cell.alpha, cell.beta, seed, run.result.checkpoint.epoch, std::move(run.test),
                      run.result.checkpoint.init_fingerprint});
    }
  }
  return rows;
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::string out = "seed,config,alpha,beta,epoch,macro_auc";
  if (!rows.empty()) {
    for (const auto& c : rows.front().test.per_class) out += ",auc_" + c.label_name;
  }
  out += ",init_fingerprint\n";
  char hex[17];
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + "," + r.name + fmt(",%g", r.alpha) + fmt(",%g", r.beta) + "," +
           std::to_string(r.epoch) + fmt(",%.6f", r.test.macro_auc);
    for (const auto& c : r.test.per_class) out += c.auc ? fmt(",%.6f", *c.auc) : std::string(",");
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.init_fingerprint));
    out += std::string(",") + hex + "\n";
  }
  return out;
}

}  // namespace leadxfer::eval
