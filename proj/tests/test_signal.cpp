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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "leadxfer/signal/folds.hpp"
#include "leadxfer/signal/pack.hpp"
#include "leadxfer/signal/preprocess.hpp"
#include "leadxfer/signal/synth.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"
#include "leadxfer/util/rng.hpp"
#include "test_support.hpp"

using namespace leadxfer;
using namespace leadxfer::signal;
using leadxfer::testing::TempDir;

namespace {

EcgRecord ramp_record(std::string id, std::size_t leads, std::size_t length) {
  EcgRecord r;
  r.id = std::move(id);
  r.n_leads = leads;
  r.length = length;
  r.samples.resize(leads * length);
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = static_cast<float>(i) * 0.25f - 3.0f;
  r.labels = {1, 0, 0, 1};
  return r;
}

DatasetManifest manifest_for(const std::vector<EcgRecord>& records) {
  DatasetManifest m;
  m.label_names = {"a", "b", "c", "d"};
  m.n_leads = records.empty() ? 12 : records.front().n_leads;
  m.length = records.empty() ? 10 : records.front().length;
  int fold = 1;
  for (const auto& r : records) m.records.push_back({r.id, r.id + ".f32", r.n_leads, r.length, fold++});
  return m;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](float x, float y) {
           return std::memcmp(&x, &y, sizeof x) == 0;
         });
}

}  // namespace

TEST_CASE("pack round trip is bit exact") {
  TempDir dir;
  auto ds = testing::small_pack(12, 100);
  save_pack(ds, dir.path());
  auto back = load_pack(dir.path());
  REQUIRE(back.records.size() == ds.records.size());
  CHECK(back.manifest.label_names == ds.manifest.label_names);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].id == ds.records[i].id);
    CHECK(back.records[i].labels == ds.records[i].labels);
    CHECK(back.fold(i) == ds.fold(i));
    CHECK(same_bits(back.records[i].samples, ds.records[i].samples));
  }

  // save -> load -> save leaves the record binaries byte-identical
  TempDir again;
  save_pack(back, again.path());
  for (const auto& e : ds.manifest.records) {
    CHECK(read_file_bytes(dir / e.file) == read_file_bytes(again / e.file));
  }
  CHECK(read_text_file(dir / "manifest.json") == read_text_file(again / "manifest.json"));
}

TEST_CASE("two 12x1000 records load with that shape") {
  TempDir dir;
  std::vector<EcgRecord> recs{ramp_record("r0", 12, 1000), ramp_record("r1", 12, 1000)};
  save_pack(manifest_for(recs), recs, dir.path());
  auto ds = load_pack(dir.path());
  REQUIRE(ds.records.size() == 2);
  for (const auto& r : ds.records) {
    CHECK(r.n_leads == 12);
    CHECK(r.length == 1000);
    CHECK(r.samples.size() == 12000);
  }
  CHECK(std::filesystem::file_size(dir / "r0.f32") == 4u * 12 * 1000);
}

TEST_CASE("empty pack has a manifest and no binaries") {
  TempDir dir;
  save_pack(manifest_for({}), {}, dir.path());
  auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  CHECK(j.at("records").empty());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) files += e.path().extension() == ".f32";
  CHECK(files == 0);
  CHECK(load_pack(dir.path()).records.empty());
}

TEST_CASE("pack errors name the offending record") {
  TempDir dir;
  std::vector<EcgRecord> recs{ramp_record("alpha", 1, 10), ramp_record("beta", 1, 10)};
  save_pack(manifest_for(recs), recs, dir.path());

  SUBCASE("missing binary") {
    std::filesystem::remove(dir / "beta.f32");
    CHECK_THROWS_WITH_AS(load_pack(dir.path()), doctest::Contains("beta"), FormatError);
  }
  SUBCASE("truncated binary") {
    auto bytes = read_file_bytes(dir / "alpha.f32");
    bytes.pop_back();
    write_file_atomic(dir / "alpha.f32", bytes);
    CHECK_THROWS_WITH_AS(load_pack(dir.path()), doctest::Contains("alpha"), FormatError);
  }
  SUBCASE("fold out of range") {
    auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    j["records"][1]["fold"] = 11;
    write_text_atomic(dir / "manifest.json", j.dump());
    CHECK_THROWS_WITH_AS(load_pack(dir.path()), doctest::Contains("beta"), FormatError);
  }
  SUBCASE("missing manifest") {
    std::filesystem::remove(dir / "manifest.json");
    CHECK_THROWS_AS(load_pack(dir.path()), FormatError);
  }
}

TEST_CASE("select_lead") {
  auto r = ramp_record("x", 12, 50);
  auto l0 = select_lead(r, 0);
  CHECK(l0.n_leads == 1);
  CHECK(l0.length == 50);
  CHECK(l0.labels == r.labels);
  CHECK(l0.id == r.id);
  CHECK(std::equal(l0.samples.begin(), l0.samples.end(), r.lead(0).begin()));
  CHECK_THROWS_AS(select_lead(r, 12), std::out_of_range);

  auto l3 = select_lead(r, 3);
  CHECK(select_lead(l3, 0).samples == l3.samples);
}

TEST_CASE("fix_length") {
  auto r = ramp_record("x", 2, 1000);
  CHECK(fix_length(r, 1000).samples == r.samples);

  auto longer = ramp_record("y", 2, 1004);
  auto cropped = fix_length(longer, 1000);
  REQUIRE(cropped.length == 1000);
  for (std::size_t l = 0; l < 2; ++l) {
    // samples 2..1001 of every lead
    CHECK(std::equal(cropped.lead(l).begin(), cropped.lead(l).end(), longer.lead(l).begin() + 2));
  }

  auto shorter = ramp_record("z", 2, 900);
  auto padded = fix_length(shorter, 1000);
  for (std::size_t l = 0; l < 2; ++l) {
    auto row = padded.lead(l);
    CHECK(std::equal(row.begin(), row.begin() + 900, shorter.lead(l).begin()));
    CHECK(std::all_of(row.begin() + 900, row.end(), [](float v) { return v == 0.0f; }));
  }
}

TEST_CASE("stratified_folds balances two single-label classes") {
  std::vector<std::vector<std::uint8_t>> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 2 ? std::vector<std::uint8_t>{1, 0} : std::vector<std::uint8_t>{0, 1});
  auto folds = stratified_folds(labels, 10, 7);
  std::map<std::pair<int, int>, int> count;  // (fold, class) -> records
  for (std::size_t i = 0; i < labels.size(); ++i) count[{folds[i], labels[i][0] ? 0 : 1}]++;
  for (int f = 1; f <= 10; ++f) {
    CHECK(count[{f, 0}] == 5);
    CHECK(count[{f, 1}] == 5);
  }
}

TEST_CASE("stratified_folds sizes, determinism and errors") {
  std::vector<std::vector<std::uint8_t>> ten(10, {1});
  auto one_each = stratified_folds(ten, 10, 0);
  std::sort(one_each.begin(), one_each.end());
  CHECK(one_each == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});

  Rng rng(5);
  std::vector<std::vector<std::uint8_t>> labels(237, std::vector<std::uint8_t>(4));
  for (auto& l : labels) {
    for (auto& v : l) v = rng.uniform() < 0.3;
  }
  auto a = stratified_folds(labels, 10, 99);
  CHECK(a == stratified_folds(labels, 10, 99));
  std::map<int, int> sizes;
  for (int f : a) {
    CHECK(f >= 1);
    CHECK(f <= 10);
    sizes[f]++;
  }
  auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end(),
                                      [](const auto& x, const auto& y) { return x.second < y.second; });
  CHECK(hi->second - lo->second <= 1);

  CHECK_THROWS(stratified_folds(std::vector<std::vector<std::uint8_t>>(9, {1}), 10, 0));
}

TEST_CASE("synthetic generator without noise or labels is the mixed latent signal") {
  SynthConfig c;
  c.n_records = 10;
  c.length = 300;
  c.noise_sigma = 0.0;
  c.label_prevalence = {0, 0, 0, 0};
  const auto ds = synth_generate(c);
  const auto A = synth_mixing_matrix(c);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    CHECK(std::all_of(r.labels.begin(), r.labels.end(), [](auto v) { return v == 0; }));
    const auto lat = synth_latents(c, synth_draw(c, i));
    bool exact = true;
    for (std::size_t l = 0; l < 12; ++l) {
      for (std::size_t t = 0; t < c.length; ++t) {
        double v = 0.0;
        for (std::size_t k = 0; k < 3; ++k) v += A[l][k] * lat[k * c.length + t];
        exact = exact && r.lead(l)[t] == static_cast<float>(v);
      }
    }
    CHECK(exact);
  }
}

TEST_CASE("mixing matrix rows are unit norm and hide latent 2 from leads 0-5") {
  const auto A = synth_mixing_matrix(SynthConfig{});
  for (std::size_t l = 0; l < 12; ++l) {
    CHECK(std::hypot(A[l][0], A[l][1], A[l][2]) == doctest::Approx(1.0).epsilon(1e-12));
    if (l < 6) {
      CHECK(std::abs(A[l][2]) <= 0.05);
    } else {
      CHECK(std::abs(A[l][2]) >= 0.3);
    }
  }
}

TEST_CASE("label 1 moves the hidden leads by at most 0.01") {
  SynthConfig c;
  c.length = 1000;
  c.noise_sigma = 0.0;
  const auto A = synth_mixing_matrix(c);
  RecordDraw plain = synth_draw(c, 3);
  plain.labels = {0, 0, 0, 0};
  RecordDraw st = plain;
  st.labels[1] = 1;
  const auto a = synth_render(c, A, plain, 3);
  const auto b = synth_render(c, A, st, 3);
  double hidden = 0.0, visible = 0.0;
  for (std::size_t l = 0; l < 12; ++l) {
    for (std::size_t t = 0; t < c.length; ++t) {
      const double d = std::abs(static_cast<double>(a.lead(l)[t]) - b.lead(l)[t]);
      (l < 6 ? hidden : visible) = std::max(l < 6 ? hidden : visible, d);
    }
  }
  CHECK(hidden <= 0.05 * 0.2 + 1e-6);
  CHECK(hidden > 0.0);
  CHECK(visible > 0.05);
}

TEST_CASE("synthetic generation is deterministic and noise-seed invariant without noise") {
  SynthConfig c;
  c.n_records = 20;
  c.length = 200;
  const auto a = synth_generate(c);
  const auto b = synth_generate(c);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(same_bits(a.records[i].samples, b.records[i].samples));
    CHECK(a.fold(i) == b.fold(i));
  }

  c.noise_sigma = 0.0;
  const auto quiet = synth_generate(c);
  c.noise_seed = 12345;
  const auto quiet2 = synth_generate(c);
  for (std::size_t i = 0; i < quiet.records.size(); ++i) CHECK(same_bits(quiet.records[i].samples, quiet2.records[i].samples));
}

TEST_CASE("synthetic prevalences and config validation") {
  SynthConfig c;
  c.n_records = 2000;
  c.length = 50;
  const auto ds = synth_generate(c);
  for (std::size_t k = 0; k < 4; ++k) {
    double pos = 0;
    for (const auto& r : ds.records) pos += r.labels[k];
    // binomial(2000, 0.3): sd ~ 20.5
    CHECK(std::abs(pos - 600.0) < 5 * 20.5);
  }

  SynthConfig bad;
  bad.label_prevalence[2] = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SynthConfig{};
  bad.noise_sigma = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stack_records gathers rows in index order") {
  auto ds = testing::small_pack(12, 60);
  std::vector<std::size_t> idx{3, 0};
  auto all = stack_records(ds, idx);
  CHECK(all.n_leads == 12);
  CHECK(std::equal(all.samples.begin(), all.samples.begin() + 720, ds.records[3].samples.begin()));
  auto one = stack_records(ds, idx, 5);
  CHECK(one.n_leads == 1);
  CHECK(std::equal(one.samples.begin() + 60, one.samples.end(), ds.records[0].lead(5).begin()));
  CHECK(std::equal(one.labels.begin(), one.labels.begin() + 4, ds.records[3].labels.begin()));
}
