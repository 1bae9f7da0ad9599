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

#include "leadxfer/autodiff/gradcheck.hpp"
#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/loss/losses.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/rng.hpp"

using namespace leadxfer;
using namespace leadxfer::loss;
using ad::Shape;
using ad::Tape;
using ad::Tensor;

namespace {

// Long double reference values.
long double ref_sigmoid(long double x) { return 1.0L / (1.0L + std::exp(-x)); }
long double ref_q(long double p, long double t) { return ref_sigmoid((2.0L * p - 1.0L) / t); }
long double ref_bern_kl(long double a, long double b) {
  return a * std::log(a / b) + (1.0L - a) * std::log((1.0L - a) / (1.0L - b));
}

float scalar_value(ad::Var v) { return v.item(); }

std::vector<float> unit_rows(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double n = 0.0;
    std::vector<double> row(dim);
    for (auto& x : row) {
      x = rng.normal();
      n += x * x;
    }
    for (std::size_t k = 0; k < dim; ++k) v[r * dim + k] = static_cast<float>(row[k] / std::sqrt(n));
  }
  return v;
}

}  // namespace

TEST_CASE("bce examples") {
  Tape tape;
  auto half = tape.constant(Tensor({2, 3}, 0.5f));
  auto ys = tape.constant({2, 3}, {1, 0, 1, 0, 0, 1});
  CHECK(scalar_value(bce_loss(half, ys)) == doctest::Approx(std::log(2.0L)).epsilon(1e-6));

  auto one = bce_loss(tape.constant({1, 1}, {0.9f}), tape.constant({1, 1}, {1.0f}));
  CHECK(scalar_value(one) == doctest::Approx(-std::log(0.9L)).epsilon(1e-6));
  CHECK(scalar_value(one) == doctest::Approx(0.105361).epsilon(1e-5));

  auto two = bce_loss(tape.constant({1, 2}, {0.9f, 0.1f}), tape.constant({1, 2}, {1.0f, 0.0f}));
  CHECK(scalar_value(two) == doctest::Approx(0.105361).epsilon(1e-5));

  // saturated predictions are clamped to stay finite
  auto sat = bce_loss(tape.constant({1, 2}, {0.0f, 1.0f}), tape.constant({1, 2}, {1.0f, 0.0f}));
  CHECK(std::isfinite(scalar_value(sat)));
  // 1 - 1e-7 rounds to the float just below one, so the two terms differ slightly
  CHECK(scalar_value(sat) == doctest::Approx(-std::log(1e-7L)).epsilon(1e-2));

  CHECK_THROWS_AS(bce_loss(half, tape.constant(Tensor({3, 2}, 0.0f))), ShapeError);
}

TEST_CASE("mkd_q examples and properties") {
  CHECK(mkd_q(0.5, 1.5) == doctest::Approx(0.5));
  CHECK(mkd_q(0.5, 0.3) == doctest::Approx(0.5));
  CHECK(mkd_q(0.8, 1.5) == doctest::Approx(static_cast<double>(ref_q(0.8L, 1.5L))).epsilon(1e-12));
  CHECK(mkd_q(0.8, 1.5) == doctest::Approx(0.598688).epsilon(1e-6));
  CHECK(mkd_q(1.0, 1.0) == doctest::Approx(0.731059).epsilon(1e-6));

  // matches the two-way temperature softmax it simplifies
  for (double p : {0.01, 0.2, 0.5, 0.77, 0.99}) {
    const double t = 1.5;
    const double softmax = std::exp(p / t) / (std::exp(p / t) + std::exp((1 - p) / t));
    CHECK(mkd_q(p, t) == doctest::Approx(softmax).epsilon(1e-12));
    CHECK(mkd_q(p, t) + mkd_q(1 - p, t) == doctest::Approx(1.0).epsilon(1e-12));
  }
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double q = mkd_q(i / 100.0, 1.5);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("mkd examples") {
  Tape tape;
  auto p = tape.constant({2, 2}, {0.3f, 0.6f, 0.9f, 0.1f});
  CHECK(scalar_value(mkd_loss(p, p, 1.5)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));

  auto v = mkd_loss(tape.constant({1, 1}, {0.8f}), tape.constant({1, 1}, {0.5f}), 1.5);
  const long double expect = 2.25L * ref_bern_kl(ref_q(0.8L, 1.5L), 0.5L);
  CHECK(scalar_value(v) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-5));
  CHECK(scalar_value(v) == doctest::Approx(0.044121).epsilon(1e-4));
}

TEST_CASE("mkd is non-negative and gradients reach only the student") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> pt(6), ps(6);
    for (auto& x : pt) x = static_cast<float>(rng.uniform(0.01, 0.99));
    for (auto& x : ps) x = static_cast<float>(rng.uniform(0.01, 0.99));
    Tape tape;
    auto t = tape.leaf(Tensor({2, 3}, pt));
    auto s = tape.leaf(Tensor({2, 3}, ps));
    auto l = mkd_loss(t, s, 1.5);
    CHECK(l.item() >= 0.0f);
    tape.backward(l);
    auto gt = tape.grad(t);
    CHECK(std::all_of(gt.begin(), gt.end(), [](float g) { return g == 0.0f; }));
    auto gs = tape.grad(s);
    CHECK(std::any_of(gs.begin(), gs.end(), [](float g) { return g != 0.0f; }));
  }
}

TEST_CASE("mkd gradient matches central differences") {
  const std::vector<float> teacher{0.8f, 0.2f, 0.6f, 0.35f};
  auto f = [&](auto& tape, auto ps) {
    using T = std::remove_cvref_t<decltype(ps.value()[0])>;
    auto pt = tape.constant(ad::BasicTensor<T>({2, 2}, std::vector<T>(teacher.begin(), teacher.end())));
    return mkd_loss(pt, ps, 1.5);
  };
  auto r = ad::finite_diff_check(f, {2, 2}, {0.5, 0.3, 0.7, 0.45});
  CHECK(r.max_rel_error <= 1e-3);
}

TEST_CASE("infonce examples") {
  Tape tape;
  auto u = unit_rows(1, 8, 1);
  std::vector<float> anchors, negs;
  for (int i = 0; i < 3; ++i) anchors.insert(anchors.end(), u.begin(), u.end());
  for (int i = 0; i < 1024; ++i) negs.insert(negs.end(), u.begin(), u.end());
  auto a = tape.constant({3, 8}, anchors);
  auto v = clt_infonce(a, a, Tensor({1024, 8}, negs), 0.07);
  CHECK(v.item() == doctest::Approx(std::log(1025.0L)).epsilon(1e-6));
  CHECK(v.item() == doctest::Approx(6.932448).epsilon(1e-6));

  auto e0 = tape.constant({1, 2}, {1.0f, 0.0f});
  auto n = Tensor({1, 2}, std::vector<float>{0.0f, 1.0f});
  auto w = clt_infonce(e0, e0, n, 1.0);
  CHECK(w.item() == doctest::Approx(static_cast<double>(std::log1p(std::exp(-1.0L)))).epsilon(1e-6));
  CHECK(w.item() == doctest::Approx(0.313262).epsilon(1e-5));
}

TEST_CASE("infonce errors") {
  Tape tape;
  auto a = tape.constant({1, 2}, {1.0f, 0.0f});
  CHECK_THROWS(clt_infonce(a, a, Tensor({0, 2}), 0.07));
  CHECK_THROWS(clt_infonce(a, tape.constant({1, 2}, {2.0f, 0.0f}), Tensor({1, 2}, std::vector<float>{0, 1}), 0.07));
  CHECK_THROWS(clt_infonce(a, a, Tensor({1, 2}, std::vector<float>{0, 3}), 0.07));
}

TEST_CASE("infonce is non-negative and increases as the positive moves away") {
  Rng rng(4);
  auto negs = unit_rows(16, 8, 5);
  for (int trial = 0; trial < 30; ++trial) {
    Tape tape;
    auto a = tape.constant({4, 8}, unit_rows(4, 8, 100 + trial));
    auto p = tape.constant({4, 8}, unit_rows(4, 8, 200 + trial));
    CHECK(clt_infonce(a, p, Tensor({16, 8}, negs), 0.07).item() >= 0.0f);
  }

  // rotate the positive away from the anchor in the plane of e0, e1
  const Tensor neg({2, 3}, std::vector<float>{0, 0, 1, 0, 0, -1});
  double prev = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const double th = i * 0.3;
    Tape tape;
    auto a = tape.constant({1, 3}, {1.0f, 0.0f, 0.0f});
    auto p = tape.constant({1, 3}, {static_cast<float>(std::cos(th)), static_cast<float>(std::sin(th)), 0.0f});
    const double v = clt_infonce(a, p, neg, 0.5).item();
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("clt_loss with everything equal is ln(N+1)") {
  const std::size_t n_rows = 1100, dim = 128;
  auto u = unit_rows(1, dim, 9);
  Tensor rows({n_rows, dim});
  for (std::size_t r = 0; r < n_rows; ++r) std::copy(u.begin(), u.end(), rows.data.begin() + r * dim);
  bank::MemoryBank sb(rows, 0.5), tb(rows, 0.5);
  std::vector<float> emb;
  for (int i = 0; i < 4; ++i) emb.insert(emb.end(), u.begin(), u.end());
  Tape tape;
  auto s = tape.constant({4, dim}, emb);
  std::vector<std::size_t> batch{0, 5, 17, 300};
  Rng rng(1);
  auto v = clt_loss(s, s, sb, tb, batch, 1024, 0.07, rng);
  CHECK(v.item() == doctest::Approx(std::log(1025.0L)).epsilon(1e-6));
  CHECK_THROWS(clt_loss(s, s, sb, tb, batch, n_rows - 3, 0.07, rng));
}

TEST_CASE("clt_loss gradient reaches only the student and matches central differences") {
  const std::size_t n_rows = 40, dim = 6;
  bank::MemoryBank sb(n_rows, 1, 0.5, dim), tb(n_rows, 2, 0.5, dim);
  const auto teacher = unit_rows(3, dim, 3);
  const std::vector<std::size_t> batch{1, 2, 30};

  {
    Tape tape;
    auto s = tape.leaf(Tensor({3, dim}, unit_rows(3, dim, 4)));
    auto t = tape.leaf(Tensor({3, dim}, teacher));
    Rng rng(8);
    tape.backward(clt_loss(s, t, sb, tb, batch, 10, 0.07, rng));
    auto gt = tape.grad(t);
    CHECK(std::all_of(gt.begin(), gt.end(), [](float g) { return g == 0.0f; }));
  }

  auto f = [&](auto& tape, auto x) {
    using T = std::remove_cvref_t<decltype(x.value()[0])>;
    auto t = tape.constant(ad::BasicTensor<T>({3, dim}, std::vector<T>(teacher.begin(), teacher.end())));
    Rng rng(8);
    return clt_loss(ad::l2_normalize(x), t, sb, tb, batch, 10, 0.5, rng);
  };
  auto raw = unit_rows(3, dim, 4);
  auto r = ad::finite_diff_check(f, {3, dim}, std::vector<double>(raw.begin(), raw.end()));
  CHECK(r.max_rel_error <= 1e-3);
}

TEST_CASE("combined loss") {
  Tape tape;
  auto b = tape.leaf(Tensor({}, std::vector<float>{0.7f}));
  auto m = tape.leaf(Tensor({}, std::vector<float>{0.04f}));
  auto c = tape.leaf(Tensor({}, std::vector<float>{6.9f}));
  CHECK(combined_loss(b, m, c, {1.0, 1.0}).item() == doctest::Approx(7.64).epsilon(1e-6));
  CHECK(combined_loss(b, m, c, {0.0, 0.0}).item() == 0.7f);
  const double once = combined_loss(b, m, c, {1.0, 0.0}).item() - 0.7;
  const double twice = combined_loss(b, m, c, {2.0, 0.0}).item() - 0.7;
  CHECK(twice == doctest::Approx(2 * once).epsilon(1e-5));

  auto total = combined_loss(b, m, c, {1.0, 0.0});
  tape.backward(total);
  auto gc = tape.grad(c);  // beta = 0 keeps the term off the graph
  CHECK(std::all_of(gc.begin(), gc.end(), [](float g) { return g == 0.0f; }));
  CHECK(tape.grad(m)[0] == 1.0f);

  Tape t2;
  auto inf = t2.leaf(Tensor({}, std::vector<float>{INFINITY}));
  auto ok = t2.leaf(Tensor({}, std::vector<float>{1.0f}));
  CHECK_THROWS_WITH_AS(combined_loss(ok, ok, inf, {1.0, 1.0}), doctest::Contains("clt"), std::domain_error);
  CHECK_THROWS_WITH_AS(combined_loss(inf, ok, ok, {1.0, 1.0}), doctest::Contains("bce"), std::domain_error);
}

TEST_CASE("loss weight validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.alpha = -1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w = LossWeights{};
  w.tau = 0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w = LossWeights{};
  w.tau_kd = -1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}
