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

#include "leadxfer/cli/app.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <ostream>

#include "leadxfer/eval/experiments.hpp"
#include "leadxfer/eval/report.hpp"
#include "leadxfer/loss/gradient_suite.hpp"
#include "leadxfer/signal/pack.hpp"
#include "leadxfer/signal/synth.hpp"
#include "leadxfer/train/trainer.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"

namespace leadxfer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Command {
  const char* name;
  const char* help;
  std::vector<std::string> required;  // path keys that must be set
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"synth", "generate the synthetic 12-lead pack", {"out"}},
      {"train-teacher", "train the 12-lead teacher", {"data", "out"}},
      {"distill", "train a single-lead student against a frozen teacher", {"data", "teacher", "out"}},
      {"eval", "score a checkpoint on one fold", {"data", "ckpt", "out"}},
      {"lead-sweep", "baseline and distilled students for each lead", {"data", "teacher", "out"}},
      {"ablation", "the four loss combinations on one lead", {"data", "teacher", "out"}},
      {"gradcheck", "finite-difference check of every op and loss", {}},
      {"export-embeddings", "projection vectors of every record as CSV", {"data", "ckpt", "out"}},
  };
  return list;
}

const Command& command_of(const std::string& name) {
  for (const auto& c : commands()) {
    if (name == c.name) return c;
  }
  throw ConfigError("command", "unknown subcommand '" + name + "'");
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

void require_existing(const RunConfig& rc, const std::string& key) {
  const auto p = rc.path(key);
  if (!fs::exists(p)) throw ConfigError(key, "no such file or directory '" + p + "'");
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

struct JsonlLog {
  std::ostream& out;
  std::string text;
  train::LogSink sink() {
    return [this](const train::EpochLog& e) {
      const auto line = e.to_json().dump();
      out << line << '\n' << std::flush;
      text += line + '\n';
    };
  }
};

signal::Dataset load_data(const RunConfig& rc) { return signal::load_pack(rc.path("data")); }

eval::StudentRecipe recipe_of(const RunConfig& rc, JsonlLog& log) {
  eval::StudentRecipe r;
  r.config = rc.train();
  if (rc.lead()) r.config.student_lead = *rc.lead();
  r.backbone = rc.backbone();
  r.seeds = rc.seeds();
  r.sink = log.sink();
  return r;
}

}  // namespace

void dispatch(const RunConfig& rc, std::ostream& out) {
  const auto& cmd = command_of(rc.command);
  for (const auto& key : cmd.required) {
    if (rc.path(key).empty()) throw ConfigError(key, "required by '" + rc.command + "'");
  }
  for (const auto& key : {"data", "teacher", "ckpt"}) {
    if (!rc.path(key).empty()) require_existing(rc, key);
  }
  // Outputs never overwrite inputs.
  const auto out_path = rc.path("out");
  for (const auto& key : {"data", "teacher", "ckpt", "student_init"}) {
    const auto in = rc.path(key);
    if (!in.empty() && !out_path.empty() && fs::weakly_canonical(in) == fs::weakly_canonical(out_path)) {
      throw ConfigError("out", "would overwrite input '" + in + "'");
    }
  }
  if (!rc.train().student_init.empty()) require_existing(rc, "student_init");

  out << "effective config: " << rc.values.dump() << '\n';
  const json effective = {{"command", rc.command}, {"config", rc.values}};

  if (rc.command == "synth") {
    const auto ds = signal::synth_generate(rc.synth());
    signal::save_pack(ds, out_path);
    write_json(fs::path(out_path) / "run_config.json", effective);
    out << "wrote " << ds.records.size() << " records to " << out_path << '\n';
  } else if (rc.command == "train-teacher") {
    const auto ds = load_data(rc);
    JsonlLog log{out, {}};
    const auto result = train::train_teacher(ds, rc.train(), rc.backbone(), log.sink());
    train::save_checkpoint(out_path, result.checkpoint);
    write_text_atomic(sibling(out_path, ".log.jsonl"), log.text);
    write_json(sibling(out_path, ".config.json"), effective);
    out << "selected epoch " << result.checkpoint.epoch << '\n';
  } else if (rc.command == "distill") {
    const auto ds = load_data(rc);
    const auto teacher = train::load_checkpoint(rc.path("teacher"));
    auto cfg = rc.train();
    if (rc.lead()) cfg.student_lead = *rc.lead();
    JsonlLog log{out, {}};
    const auto result = train::distill_student(ds, teacher, cfg, rc.backbone(), log.sink());
    train::save_checkpoint(out_path, result.checkpoint);
    write_text_atomic(sibling(out_path, ".log.jsonl"), log.text);
    write_json(sibling(out_path, ".config.json"), effective);
    out << "selected epoch " << result.checkpoint.epoch << '\n';
  } else if (rc.command == "eval") {
    const auto ds = load_data(rc);
    const auto ckpt = train::load_checkpoint(rc.path("ckpt"));
    const auto fold = rc.fold();
    if (fold < 1 || fold > static_cast<std::size_t>(signal::kNumFolds)) throw ConfigError("fold", "must be in 1..10");
    const auto report = eval::evaluate(ckpt, ds, static_cast<int>(fold), rc.lead());
    write_json(out_path, report.to_json());
    write_json(sibling(out_path, ".config.json"), effective);
    out << report.to_json().dump() << '\n';
  } else if (rc.command == "lead-sweep") {
    const auto ds = load_data(rc);
    const auto teacher = train::load_checkpoint(rc.path("teacher"));
    if (rc.leads().empty()) throw ConfigError("leads", "empty lead list");
    JsonlLog log{out, {}};
    const auto rows = eval::lead_sweep(ds, teacher, recipe_of(rc, log), rc.leads());
    fs::create_directories(out_path);
    write_text_atomic(fs::path(out_path) / "lead_sweep.csv", eval::sweep_csv(rows));
    write_text_atomic(fs::path(out_path) / "lead_sweep.svg", eval::sweep_svg(rows));
    write_text_atomic(fs::path(out_path) / "lead_sweep.log.jsonl", log.text);
    write_json(fs::path(out_path) / "run_config.json", effective);
    out << eval::sweep_csv(rows);
  } else if (rc.command == "ablation") {
    const auto ds = load_data(rc);
    const auto teacher = train::load_checkpoint(rc.path("teacher"));
    JsonlLog log{out, {}};
    const auto rows = eval::ablation_grid(ds, teacher, recipe_of(rc, log));
    fs::create_directories(out_path);
    write_text_atomic(fs::path(out_path) / "ablation.csv", eval::grid_csv(rows));
    write_text_atomic(fs::path(out_path) / "ablation.log.jsonl", log.text);
    write_json(fs::path(out_path) / "run_config.json", effective);
    out << eval::grid_csv(rows);
  } else if (rc.command == "gradcheck") {
    const auto report = loss::run_gradient_suite();
    json j = {{"tolerance", report.tolerance}, {"passed", report.passed()}, {"cases", json::array()}};
    for (const auto& c : report.cases) {
      char line[128];
      std::snprintf(line, sizeof line, "%-40s %.3e %s\n", c.name.c_str(), c.max_rel_error, c.passed ? "ok" : "FAIL");
      out << line;
      j["cases"].push_back({{"name", c.name}, {"trials", c.trials}, {"max_rel_error", c.max_rel_error}, {"passed", c.passed}});
    }
    out << (report.passed() ? "all cases passed" : "FAILED") << " in " << report.seconds << " s\n";
    if (!out_path.empty()) {
      write_json(out_path, j);
      write_json(sibling(out_path, ".config.json"), effective);
    }
    if (!report.passed()) throw std::runtime_error("gradient check failed");
  } else if (rc.command == "export-embeddings") {
    const auto ds = load_data(rc);
    const auto ckpt = train::load_checkpoint(rc.path("ckpt"));
    write_text_atomic(out_path, eval::export_embeddings(ckpt, ds, rc.lead()));
    write_json(sibling(out_path, ".config.json"), effective);
    out << "wrote " << ds.records.size() << " embeddings to " << out_path << '\n';
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-lead ECG students distilled from a 12-lead teacher"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::map<std::string, std::string>> flag_values;  // command -> key -> text

  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_file, "JSON file of configuration keys");
    sub->add_option("--set", sets, "key=value override (repeatable)");
    auto& values = flag_values[cmd.name];
    for (const auto& spec : config_schema()) {
      sub->add_option("--" + spec.key, values[spec.key], spec.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    std::map<std::string, json> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      const auto key = s.substr(0, eq);
      overrides[key] = parse_flag_value(key, s.substr(eq + 1));
    }
    // Dedicated flags win over --set.
    for (const auto& spec : config_schema()) {
      if (chosen->get_option("--" + spec.key)->count() > 0) {
        overrides[spec.key] = parse_flag_value(spec.key, flag_values[name][spec.key]);
      }
    }
    const auto rc = parse_config(name, config_file, overrides);
    dispatch(rc, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace leadxfer::cli
