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

#include <doctest.h>

#include <cmath>

#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/loss/losses.hpp"
#include "leadxfer/signal/preprocess.hpp"
#include "leadxfer/train/adam.hpp"
#include "leadxfer/train/trainer.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"
#include "test_support.hpp"

using namespace leadxfer;
using namespace leadxfer::train;
using leadxfer::testing::TempDir;

namespace {

TrainConfig quick_config(int epochs, std::uint64_t seed = 5) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.negatives = 32;
  c.seed = seed;
  return c;
}

const signal::Dataset& pack() {
  static const auto ds = testing::small_pack(96, 200);
  return ds;
}

const Checkpoint& small_teacher() {
  static const Checkpoint t = train_teacher(pack(), quick_config(2, 1), testing::tiny_backbone()).checkpoint;
  return t;
}

// Mean BCE over the training folds with batch statistics, on a copy of the model.
double train_bce(model::ModelParams params, const signal::Dataset& ds) {
  auto stacked = signal::stack_records(ds, ds.indices_in_folds(1, 8));
  ad::Tape tape;
  auto x = tape.constant({stacked.n, stacked.n_leads, stacked.length}, stacked.samples);
  std::vector<float> ys(stacked.labels.begin(), stacked.labels.end());
  auto y = tape.constant({stacked.n, stacked.n_classes}, ys);
  auto out = model::forward(tape, params, x, model::Mode::kTrain);
  return loss::bce_loss(out.probs, y).item();
}

std::vector<nlohmann::json> log_json(const TrainResult& r) {
  std::vector<nlohmann::json> out;
  for (const auto& e : r.log) out.push_back(e.to_json());
  return out;
}

}  // namespace

TEST_CASE("adam examples") {
  std::map<std::string, ad::Tensor> params;
  params["w"] = ad::Tensor({3}, std::vector<float>{0.5f, -1.0f, 2.0f});
  params["w"].requires_grad = true;
  params["w"].grad = {0.0f, 0.0f, 0.0f};
  AdamState state;
  adam_step(params, state, {}, 1);
  CHECK(params["w"].data == std::vector<float>{0.5f, -1.0f, 2.0f});

  std::map<std::string, ad::Tensor> scalar;
  scalar["t"] = ad::Tensor({1}, std::vector<float>{0.0f});
  scalar["t"].requires_grad = true;
  scalar["t"].grad = {1.0f};
  AdamState s2;
  adam_step(scalar, s2, {.lr = 0.1}, 1);
  CHECK(scalar["t"].data[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-7));

  std::map<std::string, ad::Tensor> signs;
  signs["a"] = ad::Tensor({4}, std::vector<float>{1, 1, 1, 1});
  signs["a"].requires_grad = true;
  signs["a"].grad = {0.3f, -2.0f, 1e-4f, -7.0f};
  AdamState s3;
  adam_step(signs, s3, {}, 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK((signs["a"].data[i] - 1.0f) * signs["a"].grad[i] < 0.0f);

  CHECK_THROWS_AS(adam_step(signs, s3, {}, 0), std::invalid_argument);
}

TEST_CASE("adam matches the bias-corrected update over several steps") {
  std::map<std::string, ad::Tensor> p;
  p["x"] = ad::Tensor({1}, std::vector<float>{1.0f});
  p["x"].requires_grad = true;
  AdamState s;
  double theta = 1.0, m = 0.0, v = 0.0;
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (long t = 1; t <= 20; ++t) {
    const double g = 2.0 * theta - 0.5;
    p["x"].grad = {static_cast<float>(g)};
    adam_step(p, s, {.lr = lr}, t);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    CHECK(p["x"].data[0] == doctest::Approx(theta).epsilon(1e-5));
  }
}

TEST_CASE("zero epochs returns the initialisation") {
  auto c = quick_config(0);
  auto r = train_teacher(pack(), c, testing::tiny_backbone());
  CHECK(r.log.empty());
  CHECK(r.checkpoint.epoch == 0);
  auto arch = testing::tiny_backbone();
  auto init = model::build_backbone(arch, derive_seed(c.seed, "init"));
  CHECK(r.checkpoint.model.fingerprint() == init.fingerprint());
  CHECK(r.checkpoint.init_fingerprint == init.fingerprint());
}

TEST_CASE("one epoch on 64 records lowers the training loss") {
  const auto ds = testing::small_pack(64, 1000);
  auto c = quick_config(1);
  c.batch_size = 32;
  model::BackboneConfig arch;
  auto zero = train_teacher(ds, quick_config(0), arch).checkpoint;
  auto one = train_teacher(ds, quick_config(1), arch);
  REQUIRE(one.log.size() == 1);
  CHECK(std::isfinite(one.log[0].train_loss));
  CHECK(train_bce(one.checkpoint.model, ds) < train_bce(zero.model, ds));
}

TEST_CASE("teacher training is deterministic and logs every epoch") {
  std::vector<EpochLog> seen;
  auto a = train_teacher(pack(), quick_config(3), testing::tiny_backbone(), [&](const EpochLog& e) { seen.push_back(e); });
  auto b = train_teacher(pack(), quick_config(3), testing::tiny_backbone());
  CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
  CHECK(log_json(a) == log_json(b));
  REQUIRE(a.log.size() == 3);
  CHECK(seen.size() == 3);
  for (int e = 0; e < 3; ++e) {
    auto j = a.log[e].to_json();
    CHECK(j.at("stage") == "teacher");
    CHECK(j.at("epoch") == e + 1);
    CHECK(j.at("components").contains("bce"));
    CHECK(j.at("components").at("mkd") == 0.0);
    CHECK(std::isfinite(a.log[e].train_loss));
  }

  // the kept epoch has the best validation AUC, earliest on ties
  int best = 0;
  for (int e = 0; e < 3; ++e) {
    if (*a.log[e].val_auc > *a.log[best].val_auc) best = e;
  }
  CHECK(a.checkpoint.epoch == best + 1);
  CHECK(a.checkpoint.val_auc == a.log[best].val_auc);

  auto other = train_teacher(pack(), quick_config(3, 6), testing::tiny_backbone());
  CHECK(encode_checkpoint(other.checkpoint) != encode_checkpoint(a.checkpoint));
}

TEST_CASE("distillation with zero weights reproduces the plain student") {
  auto c = quick_config(2, 9);
  c.student_lead = 3;
  c.weights.alpha = 0.0;
  c.weights.beta = 0.0;
  auto plain = train_student(pack(), c, testing::tiny_backbone());
  auto zero = distill_student(pack(), small_teacher(), c, testing::tiny_backbone());
  REQUIRE(plain.log.size() == zero.log.size());
  for (std::size_t e = 0; e < plain.log.size(); ++e) {
    CHECK(plain.log[e].train_loss == zero.log[e].train_loss);
    CHECK(plain.log[e].bce == zero.log[e].bce);
    CHECK(plain.log[e].val_auc == zero.log[e].val_auc);
  }
  CHECK(plain.checkpoint.model.fingerprint() == zero.checkpoint.model.fingerprint());
  CHECK(plain.checkpoint.init_fingerprint == zero.checkpoint.init_fingerprint);
}

TEST_CASE("distillation leaves the teacher untouched and is deterministic") {
  Checkpoint teacher = small_teacher();
  const auto before = teacher.model.fingerprint();
  const auto bytes = encode_checkpoint(teacher);
  auto c = quick_config(2, 11);
  auto a = distill_student(pack(), teacher, c, testing::tiny_backbone());
  auto b = distill_student(pack(), teacher, c, testing::tiny_backbone());
  CHECK(teacher.model.fingerprint() == before);
  CHECK(encode_checkpoint(teacher) == bytes);
  CHECK(a.checkpoint.teacher_fingerprint == before);
  CHECK(a.checkpoint.stage == "distill");
  CHECK(a.checkpoint.model.config.in_leads == 1);
  CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
  CHECK(log_json(a) == log_json(b));
  for (const auto& e : a.log) {
    CHECK(std::isfinite(e.mkd));
    CHECK(std::isfinite(e.clt));
    CHECK(e.clt > 0.0);
    CHECK(e.train_loss == doctest::Approx(e.bce + e.mkd + e.clt).epsilon(1e-4));
  }
  REQUIRE(a.checkpoint.student_bank.has_value());
  CHECK(a.checkpoint.student_bank->shape == ad::Shape{pack().indices_in_folds(1, 8).size(), 16});
}

TEST_CASE("training errors") {
  auto arch = testing::tiny_backbone();
  SUBCASE("teacher needs 12 leads") {
    auto ds = pack();
    for (auto& r : ds.records) r = signal::select_lead(r, 0);
    for (auto& e : ds.manifest.records) e.n_leads = 1;
    ds.manifest.n_leads = 1;
    CHECK_THROWS_WITH_AS(train_teacher(ds, quick_config(1), arch), doctest::Contains("n_leads"), ConfigError);
  }
  SUBCASE("student lead out of range") {
    auto c = quick_config(1);
    c.student_lead = 12;
    CHECK_THROWS_WITH_AS(distill_student(pack(), small_teacher(), c, arch), doctest::Contains("student_lead"),
                         ConfigError);
    CHECK_THROWS_AS(train_student(pack(), c, arch), ConfigError);
  }
  SUBCASE("label space mismatch") {
    Checkpoint t = small_teacher();
    auto cfg = t.model.config;
    cfg.n_classes = 3;
    t.model = model::build_backbone(cfg, 1);
    CHECK_THROWS_AS(distill_student(pack(), t, quick_config(1), arch), ConfigError);
  }
  SUBCASE("single-lead teacher") {
    Checkpoint t = small_teacher();
    auto cfg = t.model.config;
    cfg.in_leads = 1;
    t.model = model::build_backbone(cfg, 1);
    CHECK_THROWS_AS(distill_student(pack(), t, quick_config(1), arch), ConfigError);
  }
  SUBCASE("invalid config") {
    auto c = quick_config(1);
    c.batch_size = 1;
    CHECK_THROWS_AS(train_teacher(pack(), c, arch), ConfigError);
    c = quick_config(-1);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = quick_config(1);
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_CASE("student initialisation from a checkpoint file") {
  TempDir dir;
  auto c = quick_config(0, 3);
  auto init = train_student(pack(), c, testing::tiny_backbone()).checkpoint;
  save_checkpoint(dir / "init.ckpt", init);
  auto c2 = quick_config(0, 99);
  c2.student_init = (dir / "init.ckpt").string();
  auto r = train_student(pack(), c2, testing::tiny_backbone());
  CHECK(r.checkpoint.model.fingerprint() == init.model.fingerprint());

  auto wide = testing::tiny_backbone();
  wide.stem_channels = 8;
  CHECK_THROWS_WITH_AS(train_student(pack(), c2, wide), doctest::Contains("student_init"), ConfigError);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  TempDir dir;
  auto c = quick_config(1, 12);
  auto d = distill_student(pack(), small_teacher(), c, testing::tiny_backbone()).checkpoint;
  save_checkpoint(dir / "a.ckpt", d);
  auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.stage == d.stage);
  CHECK(back.train == d.train);
  CHECK(back.epoch == d.epoch);
  CHECK(back.val_auc == d.val_auc);
  CHECK(back.init_fingerprint == d.init_fingerprint);
  CHECK(back.teacher_fingerprint == d.teacher_fingerprint);
  CHECK(back.model.fingerprint() == d.model.fingerprint());
  CHECK(back.model.config == d.model.config);
  REQUIRE(back.student_bank.has_value());
  CHECK(back.student_bank->data == d.student_bank->data);
  CHECK(back.teacher_bank->data == d.teacher_bank->data);
  save_checkpoint(dir / "b.ckpt", back);
  CHECK(read_file_bytes(dir / "a.ckpt") == read_file_bytes(dir / "b.ckpt"));

  auto bytes = read_file_bytes(dir / "a.ckpt");
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_checkpoint(std::span<const char>(bytes.data(), bytes.size())), FormatError);
}

TEST_CASE("train config json round trip") {
  TrainConfig c = quick_config(7, 42);
  c.weights.alpha = 0.25;
  c.student_init = "x.ckpt";
  auto j = c.to_json();
  CHECK(j.at("alpha") == 0.25);
  CHECK(TrainConfig::from_json(j) == c);
}
