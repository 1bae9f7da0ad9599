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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Usage: acceptance [WORK_DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/bank/memory_bank.hpp"
#include "leadxfer/cli/app.hpp"
#include "leadxfer/eval/experiments.hpp"
#include "leadxfer/eval/report.hpp"
#include "leadxfer/loss/gradient_suite.hpp"
#include "leadxfer/loss/losses.hpp"
#include "leadxfer/signal/pack.hpp"
#include "leadxfer/signal/synth.hpp"
#include "leadxfer/train/trainer.hpp"
#include "leadxfer/util/alloc.hpp"
#include "leadxfer/util/io.hpp"
#include "leadxfer/util/rng.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace leadxfer;

namespace {

constexpr int kTeacherEpochs = 20;
constexpr std::uint64_t kTeacherSeed = 1;
constexpr int kStudentEpochs = 15;
constexpr std::size_t kStudentLead = 0;
constexpr std::size_t kHiddenLabel = 1;
const std::vector<std::uint64_t> kSeeds{1000, 1001, 1002, 1003, 1004};

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

void gradient_suite() {
  const auto r = loss::run_gradient_suite(20240611, 10, 1e-3);
  double worst = 0.0;
  std::string failed;
  for (const auto& c : r.cases) {
    worst = std::max(worst, c.max_rel_error);
    if (!c.passed || c.trials != 10) failed += " " + c.name;
  }
  verdict(1, r.passed() && failed.empty() && r.seconds <= 60.0,
          std::to_string(r.cases.size()) + " cases, worst relative error " + fmt("%.2e", worst) + ", " +
              fmt("%.1f", r.seconds) + " s" + (failed.empty() ? "" : ", failed:" + failed));
}

// ---------------------------------------------------------------- 2

void loss_identities() {
  using ad::Tape;
  using ad::Tensor;
  std::vector<std::string> bad;
  auto expect = [&](const char* name, double got, double want) {
    if (!(std::abs(got - want) <= 1e-6)) bad.push_back(std::string(name) + "=" + fmt("%.9f", got));
  };

  {
    const std::size_t dim = 128, rows = 1100;
    Rng rng(7);
    std::vector<float> u(dim);
    double n = 0.0;
    for (auto& x : u) {
      x = static_cast<float>(rng.normal());
      n += static_cast<double>(x) * x;
    }
    for (auto& x : u) x = static_cast<float>(x / std::sqrt(n));
    Tensor bank_rows({rows, dim});
    for (std::size_t r = 0; r < rows; ++r) std::copy(u.begin(), u.end(), bank_rows.data.begin() + r * dim);
    bank::MemoryBank sb(bank_rows, 0.5), tb(bank_rows, 0.5);
    std::vector<float> emb;
    for (int i = 0; i < 8; ++i) emb.insert(emb.end(), u.begin(), u.end());
    Tape tape;
    auto e = tape.constant({8, dim}, emb);
    std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5, 6, 7};
    Rng draw(1);
    expect("clt_uniform", loss::clt_loss(e, e, sb, tb, batch, 1024, 0.07, draw).item(), std::log(1025.0));
    expect("clt_uniform_ref", std::log(1025.0), 6.932448);
  }
  {
    Tape tape;
    auto p = tape.constant({2, 4}, {0.1f, 0.5f, 0.9f, 0.3f, 0.7f, 0.2f, 0.6f, 0.99f});
    expect("mkd_same", loss::mkd_loss(p, p, 1.5).item(), 0.0);
  }
  for (double t : {0.5, 1.0, 1.5, 4.0}) expect("mkd_q_half", loss::mkd_q(0.5, t), 0.5);
  {
    Tape tape;
    auto p = tape.constant(Tensor({3, 4}, 0.5f));
    auto y = tape.constant({3, 4}, {1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1});
    expect("bce_half", loss::bce_loss(p, y).item(), std::log(2.0));
  }
  {
    Tape tape;
    auto p = tape.constant({2, 2}, {0.8f, 0.3f, 0.4f, 0.9f});
    auto y = tape.constant({2, 2}, {1, 0, 0, 1});
    auto b = loss::bce_loss(p, y);
    auto m = loss::mkd_loss(tape.constant({2, 2}, {0.7f, 0.1f, 0.2f, 0.6f}), p, 1.5);
    auto c = tape.constant(ad::Tensor({}, std::vector<float>{6.9f}));
    const auto total = loss::combined_loss(b, m, c, {0.0, 0.0});
    if (total.item() != b.item()) bad.push_back("mvkt_zero_weights");
  }
  std::string listed;
  for (const auto& b : bad) listed += " " + b;
  verdict(2, bad.empty(),
          bad.empty() ? "CLT ln 1025, MKD(p,p), q(0.5), BCE ln 2, zero-weight total all within 1e-6"
                      : "violations:" + listed);
}

// ---------------------------------------------------------------- 3

void bank_invariants() {
  const std::size_t n = 200, dim = 128;
  bank::MemoryBank b(n, 5);
  Rng rng(9);
  double worst = 0.0;
  for (int step = 0; step < 1000; ++step) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    rng.shuffle(all.begin(), all.end());
    std::vector<std::size_t> idx(all.begin(), all.begin() + 32);
    std::vector<float> f(32 * dim);
    for (std::size_t r = 0; r < 32; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        f[r * dim + k] = static_cast<float>(rng.normal());
        s += static_cast<double>(f[r * dim + k]) * f[r * dim + k];
      }
      for (std::size_t k = 0; k < dim; ++k) f[r * dim + k] = static_cast<float>(f[r * dim + k] / std::sqrt(s));
    }
    b.update(idx, f);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (float v : b.row(r)) s += static_cast<double>(v) * v;
      worst = std::max(worst, std::abs(std::sqrt(s) - 1.0));
    }
  }

  bool excluded_ok = true;
  const std::vector<std::size_t> exclude{3, 50, 51, 199};
  for (int t = 0; t < 1000; ++t) {
    for (auto i : b.sample_indices(64, exclude, rng)) {
      excluded_ok = excluded_ok && std::find(exclude.begin(), exclude.end(), i) == exclude.end();
    }
  }

  std::vector<float> f(dim, 0.0f);
  f[1] = 1.0f;
  const std::size_t one[] = {0};
  bank::MemoryBank keep(n, 6, 1.0), replace(n, 6, 0.0);
  const auto before = keep.data();
  keep.update(one, f);
  replace.update(one, f);
  const bool degenerate_ok =
      keep.data() == before && std::equal(f.begin(), f.end(), replace.row(0).begin());

  verdict(3, worst <= 1e-5 && excluded_ok && degenerate_ok,
          "max |norm-1| " + fmt("%.2e", worst) + " over 1000 updates, exclusion " + (excluded_ok ? "held" : "violated") +
              ", m=0/m=1 " + (degenerate_ok ? "exact" : "inexact"));
}

// ---------------------------------------------------------------- 4-6, 8

struct Cell {
  const char* name;
  const char* file;
  double alpha, beta;
};
const Cell kCells[] = {
    {"BCE", "bce", 0.0, 0.0}, {"BCE+MKD", "bce_mkd", 1.0, 0.0}, {"BCE+CLT", "bce_clt", 0.0, 1.0}, {"BCE+MKD+CLT", "full", 1.0, 1.0}};

struct Experiment {
  double teacher_auc = 0.0;
  int teacher_epoch = 0;
  double teacher_seconds = 0.0;
  std::map<std::string, std::vector<double>> macro, hidden;  // per cell, in seed order
  std::map<std::string, double> seconds;                     // per cell, summed over seeds
  bool teacher_frozen = true;
};

void write_log(const fs::path& path, const std::vector<train::EpochLog>& log) {
  std::string text;
  for (const auto& e : log) text += e.to_json().dump() + "\n";
  write_text_atomic(path, text);
}

Experiment run_experiment(const signal::Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  Experiment ex;
  model::BackboneConfig arch;

  train::TrainConfig tc;
  tc.epochs = kTeacherEpochs;
  tc.seed = kTeacherSeed;
  auto t0 = std::chrono::steady_clock::now();
  auto teacher = train::train_teacher(ds, tc, arch);
  ex.teacher_seconds = seconds_since(t0);
  const auto& tck = teacher.checkpoint;
  train::save_checkpoint(dir / "teacher.ckpt", tck);
  write_log(dir / "teacher.log.jsonl", teacher.log);
  const auto trep = eval::evaluate(tck, ds, signal::kTestFold, std::nullopt);
  write_text_atomic(dir / "teacher.report.json", trep.to_json().dump(2) + "\n");
  ex.teacher_auc = trep.macro_auc;
  ex.teacher_epoch = tck.epoch;
  std::printf("  teacher: epoch %d kept, test macro AUC %.4f, %.0f s\n", tck.epoch, trep.macro_auc, ex.teacher_seconds);
  std::fflush(stdout);

  const auto teacher_hash = tck.model.fingerprint();
  eval::StudentRecipe recipe;
  recipe.config.epochs = kStudentEpochs;
  recipe.backbone = arch;
  std::vector<eval::GridRow> grid;
  for (auto seed : kSeeds) {
    for (const auto& cell : kCells) {
      auto c0 = std::chrono::steady_clock::now();
      auto run = eval::run_student(ds, tck, recipe, kStudentLead, seed, cell.alpha, cell.beta);
      ex.seconds[cell.name] += seconds_since(c0);
      const std::string stem = std::string(cell.file) + "_" + std::to_string(seed);
      train::save_checkpoint(dir / (stem + ".ckpt"), run.result.checkpoint);
      write_log(dir / (stem + ".log.jsonl"), run.result.log);
      write_text_atomic(dir / (stem + ".report.json"), run.test.to_json().dump(2) + "\n");
      ex.macro[cell.name].push_back(run.test.macro_auc);
      ex.hidden[cell.name].push_back(run.test.per_class.at(kHiddenLabel).auc.value_or(NAN));
      if (run.result.checkpoint.teacher_fingerprint && *run.result.checkpoint.teacher_fingerprint != teacher_hash) {
        ex.teacher_frozen = false;
      }
      grid.push_back({cell.name, cell.alpha, cell.beta, seed, run.result.checkpoint.epoch, run.test,
                      run.result.checkpoint.init_fingerprint});
      std::printf("  seed %llu %-12s epoch %2d macro %.4f label%zu %.4f (%.0f s)\n",
                  static_cast<unsigned long long>(seed), cell.name, run.result.checkpoint.epoch, run.test.macro_auc,
                  kHiddenLabel, ex.hidden[cell.name].back(), seconds_since(c0));
      std::fflush(stdout);
    }
  }
  ex.teacher_frozen = ex.teacher_frozen && tck.model.fingerprint() == teacher_hash;
  write_text_atomic(dir / "ablation.csv", eval::grid_csv(grid));
  return ex;
}

void distillation_experiment(const Experiment& ex) {
  const double base = eval::median(ex.macro.at("BCE")), mvkt = eval::median(ex.macro.at("BCE+MKD+CLT"));
  const double base_h = eval::median(ex.hidden.at("BCE")), mvkt_h = eval::median(ex.hidden.at("BCE+MKD+CLT"));
  const double runtime = ex.teacher_seconds + ex.seconds.at("BCE") + ex.seconds.at("BCE+MKD+CLT");
  const bool ok = kTeacherEpochs <= 30 && ex.teacher_auc >= 0.95 && mvkt >= base + 0.02 && mvkt_h >= base_h + 0.05 &&
                  runtime <= 1200.0;
  verdict(4, ok,
          "teacher " + fmt("%.4f", ex.teacher_auc) + " (" + std::to_string(kTeacherEpochs) +
              " epochs); median macro baseline " + fmt("%.4f", base) + " vs MVKT " + fmt("%.4f", mvkt) + " (gain " +
              fmt("%+.4f", mvkt - base) + ", need +0.02); label " + std::to_string(kHiddenLabel) + " " +
              fmt("%.4f", base_h) + " vs " + fmt("%.4f", mvkt_h) + " (gain " + fmt("%+.4f", mvkt_h - base_h) +
              ", need +0.05); " + fmt("%.0f", runtime) + " s");
}

void ablation_ordering(const Experiment& ex) {
  int full_best = 0;
  for (std::size_t s = 0; s < kSeeds.size(); ++s) {
    const double full = ex.macro.at("BCE+MKD+CLT")[s];
    bool best = true;
    for (const auto& cell : kCells) best = best && full >= ex.macro.at(cell.name)[s];
    full_best += best ? 1 : 0;
  }
  const double bce = eval::median(ex.macro.at("BCE"));
  const double mkd = eval::median(ex.macro.at("BCE+MKD")) - bce;
  const double clt = eval::median(ex.macro.at("BCE+CLT")) - bce;
  verdict(5, full_best >= 3 && mkd >= -0.01 && clt >= -0.01,
          "full combination best in " + std::to_string(full_best) + "/5 seeds (need 3); median change vs BCE: +MKD " +
              fmt("%+.4f", mkd) + ", +CLT " + fmt("%+.4f", clt) + " (floor -0.01)");
}

std::vector<std::string> differing_files(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diff;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
  if (count_b != names.size()) diff.push_back("<file count>");
  for (const auto& n : names) {
    if (!fs::exists(b / n) || read_file_bytes(a / n) != read_file_bytes(b / n)) diff.push_back(n);
  }
  return diff;
}

// ---------------------------------------------------------------- 7, 8 through the command line

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "leadxfer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, std::cerr);
  return code;
}

bool same_samples(const signal::Dataset& a, const signal::Dataset& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.id != y.id || x.labels != y.labels || a.fold(i) != b.fold(i) || x.samples.size() != y.samples.size() ||
        std::memcmp(x.samples.data(), y.samples.data(), x.samples.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

void round_trips(const signal::Dataset& ds, const fs::path& work, const fs::path& teacher_ckpt) {
  const fs::path pack = work / "pack", again = work / "pack_again";
  signal::save_pack(ds, pack);
  const auto loaded = signal::load_pack(pack);
  signal::save_pack(loaded, again);
  bool pack_ok = same_samples(ds, loaded) && differing_files(pack, again).empty();

  const auto ckpt = train::load_checkpoint(teacher_ckpt);
  bool ckpt_ok = train::encode_checkpoint(ckpt) == read_file_bytes(teacher_ckpt);

  const fs::path sweep = work / "sweep";
  const int code = cli({"lead-sweep", "--data", pack.string(), "--teacher", teacher_ckpt.string(), "--leads", "0,6",
                        "--seeds", "1", "--epochs", "1", "--out", sweep.string()});
  std::size_t rows = 0;
  bool svg_ok = false;
  if (code == 0) {
    const auto csv = read_text_file(sweep / "lead_sweep.csv");
    rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
    svg_ok = testing::well_formed_xml(read_text_file(sweep / "lead_sweep.svg"));
  }
  verdict(7, pack_ok && ckpt_ok && code == 0 && rows == 2 && svg_ok,
          std::string("pack ") + (pack_ok ? "bit-exact" : "differs") + ", checkpoint " +
              (ckpt_ok ? "bit-exact" : "differs") + ", lead-sweep exit " + std::to_string(code) + " with " +
              std::to_string(rows) + " rows for 2 leads, SVG " + (svg_ok ? "well-formed" : "malformed"));
}

void frozen_teacher(const fs::path& work, const fs::path& teacher_ckpt, bool in_experiment) {
  const auto bytes = read_file_bytes(teacher_ckpt);
  const auto before = train::load_checkpoint(teacher_ckpt).model.fingerprint();
  const fs::path student = work / "distilled.ckpt";
  const int code = cli({"distill", "--data", (work / "pack").string(), "--teacher", teacher_ckpt.string(), "--lead", "0",
                        "--epochs", "1", "--out", student.string()});
  const auto after = train::load_checkpoint(teacher_ckpt).model.fingerprint();
  bool recorded = false;
  if (code == 0) {
    const auto s = train::load_checkpoint(student);
    recorded = s.teacher_fingerprint && *s.teacher_fingerprint == before;
  }
  verdict(8, code == 0 && before == after && read_file_bytes(teacher_ckpt) == bytes && recorded && in_experiment,
          std::string("teacher hash ") + (before == after ? "unchanged" : "changed") +
              " across distill (exit " + std::to_string(code) + "), student records " +
              (recorded ? "the same hash" : "a different hash") + ", acceptance runs " +
              (in_experiment ? "kept it frozen" : "changed it"));
}

}  // namespace

int main(int argc, char** argv) {
  keep_freed_memory();
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "leadxfer_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto start = std::chrono::steady_clock::now();

  gradient_suite();
  loss_identities();
  bank_invariants();

  const auto ds = signal::synth_generate(signal::SynthConfig{});
  std::size_t train_n = ds.indices_in_folds(1, 8).size(), val_n = ds.indices_in_folds(9, 9).size(),
              test_n = ds.indices_in_folds(10, 10).size();
  std::printf("  pack: %zu records, %zu leads x %zu samples, split %zu/%zu/%zu\n", ds.records.size(), ds.manifest.n_leads,
              ds.manifest.length, train_n, val_n, test_n);

  const auto first = run_experiment(ds, work / "run_a");
  distillation_experiment(first);
  ablation_ordering(first);

  std::printf("  repeating the experiment for the determinism check\n");
  const auto second = run_experiment(ds, work / "run_b");
  const auto diff = differing_files(work / "run_a", work / "run_b");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(work / "run_a")) ++files;
  std::string listed;
  for (const auto& d : diff) listed += " " + d;
  verdict(6, diff.empty() && first.macro == second.macro,
          std::to_string(files) + " checkpoint, log and report files compared, " + std::to_string(diff.size()) +
              " differ" + listed);

  round_trips(ds, work, work / "run_a" / "teacher.ckpt");
  frozen_teacher(work, work / "run_a" / "teacher.ckpt", first.teacher_frozen && second.teacher_frozen);

  std::printf("%d of 8 criteria failed, %.0f s total\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
