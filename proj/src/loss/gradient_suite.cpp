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

#include "leadxfer/loss/gradient_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "leadxfer/autodiff/gradcheck.hpp"
#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/bank/memory_bank.hpp"
#include "leadxfer/loss/losses.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::loss {

using ad::Shape;

bool GradientSuiteReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradCheckCase& c) { return c.passed; });
}

namespace {

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Values in [-2, 2] that stay 0.05 away from every point in `kinks`.
std::vector<double> away_from(Rng& rng, std::size_t n, std::initializer_list<double> kinks) {
  std::vector<double> v(n);
  for (auto& x : v) {
    bool ok = false;
    while (!ok) {
      x = rng.uniform(-2.0, 2.0);
      ok = std::all_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(x - k) > 0.05; });
    }
  }
  return v;
}

// Distinct values spread over [-2, 2] with gaps of at least 4/n, in random order.
std::vector<double> distinct_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = -2.0 + 4.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  rng.shuffle(v.begin(), v.end());
  return v;
}

std::vector<double> unit_rows(Rng& rng, std::size_t rows, std::size_t dim) {
  std::vector<double> v(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      v[r * dim + j] = rng.normal();
      ss += v[r * dim + j] * v[r * dim + j];
    }
    for (std::size_t j = 0; j < dim; ++j) v[r * dim + j] /= std::sqrt(ss);
  }
  return v;
}

template <typename T>
ad::BasicVar<T> constant(ad::BasicTape<T>& tape, const Shape& shape, const std::vector<double>& values) {
  return tape.constant(shape, std::vector<T>(values.begin(), values.end()));
}

// sum(weights * y): a scalar whose gradient exercises every output entry.
template <typename T>
ad::BasicVar<T> weighted_sum(ad::BasicVar<T> y, const std::vector<double>& weights) {
  return ad::sum(ad::mul(y, constant(*y.tape, y.shape(), weights)));
}

class Suite {
 public:
  Suite(std::uint64_t seed, int trials, double tolerance) : rng_(seed), trials_(trials), tol_(tolerance) {}

  // `make` draws one trial: it returns the input point and the function to check.
  template <typename Make>
  void run(const std::string& name, Make make) {
    GradCheckCase c;
    c.name = name;
    c.trials = trials_;
    for (int t = 0; t < trials_; ++t) {
      auto [shape, x, f] = make(rng_);
      auto r = ad::finite_diff_check(f, shape, x);
      c.max_rel_error = std::max(c.max_rel_error, r.max_rel_error);
    }
    c.passed = c.max_rel_error <= tol_;
    report_.cases.push_back(c);
  }

  GradientSuiteReport finish() {
    report_.tolerance = tol_;
    return report_;
  }

 private:
  Rng rng_;
  int trials_;
  double tol_;
  GradientSuiteReport report_;
};

template <typename F>
auto trial(Shape shape, std::vector<double> x, F f) {
  return std::tuple<Shape, std::vector<double>, F>(std::move(shape), std::move(x), std::move(f));
}

// Second operand for binary ops, held fixed during one trial.
#define LX_BINARY_CASE(NAME, OP)                                                                    \
  suite.run(NAME " (lhs)", [](Rng& r) {                                                             \
    Shape s{3, 4};                                                                                  \
    auto other = uniform_values(r, 12);                                                             \
    auto w = uniform_values(r, 12);                                                                 \
    return trial(s, uniform_values(r, 12), [=](auto& tape, auto x) {                                \
      return weighted_sum(OP(x, constant(tape, s, other)), w);                                      \
    });                                                                                             \
  });                                                                                               \
  suite.run(NAME " (rhs)", [](Rng& r) {                                                             \
    Shape s{3, 4};                                                                                  \
    auto other = uniform_values(r, 12);                                                             \
    auto w = uniform_values(r, 12);                                                                 \
    return trial(s, uniform_values(r, 12), [=](auto& tape, auto x) {                                \
      return weighted_sum(OP(constant(tape, s, other), x), w);                                      \
    });                                                                                             \
  });

#define LX_UNARY_CASE(NAME, SHAPE, MAKE_X, EXPR)                                                    \
  suite.run(NAME, [](Rng& r) {                                                                      \
    Shape s = SHAPE;                                                                                \
    auto x0 = MAKE_X;                                                                               \
    return trial(s, x0, [](auto&, auto x) { return EXPR; });                                        \
  });

}  // namespace

GradientSuiteReport run_gradient_suite(std::uint64_t seed, int trials, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  Suite suite(seed, trials, tolerance);

  LX_BINARY_CASE("add", ad::add)
  LX_BINARY_CASE("sub", ad::sub)
  LX_BINARY_CASE("mul", ad::mul)
  suite.run("matmul (lhs)", [](Rng& r) {
    auto b = uniform_values(r, 20);
    auto w = uniform_values(r, 15);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto& tape, auto x) { return weighted_sum(ad::matmul(x, constant(tape, {4, 5}, b)), w); });
  });
  suite.run("matmul (rhs)", [](Rng& r) {
    auto a = uniform_values(r, 12);
    auto w = uniform_values(r, 15);
    return trial(Shape{4, 5}, uniform_values(r, 20),
                 [=](auto& tape, auto x) { return weighted_sum(ad::matmul(constant(tape, {3, 4}, a), x), w); });
  });

  suite.run("scale", [](Rng& r) {
    auto w = uniform_values(r, 6);
    return trial(Shape{6}, uniform_values(r, 6), [=](auto&, auto x) { return weighted_sum(ad::scale(x, -1.7), w); });
  });
  suite.run("add_scalar", [](Rng& r) {
    auto w = uniform_values(r, 6);
    return trial(Shape{6}, uniform_values(r, 6),
                 [=](auto&, auto x) { return weighted_sum(ad::add_scalar(x, 0.3), w); });
  });
  suite.run("relu", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, away_from(r, 12, {0.0}), [=](auto&, auto x) { return weighted_sum(ad::relu(x), w); });
  });
  suite.run("sigmoid", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12), [=](auto&, auto x) { return weighted_sum(ad::sigmoid(x), w); });
  });
  suite.run("exp", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12), [=](auto&, auto x) { return weighted_sum(ad::exp(x), w); });
  });
  suite.run("log", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12, 0.2, 2.0),
                 [=](auto&, auto x) { return weighted_sum(ad::log(x), w); });
  });
  suite.run("clamp", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, away_from(r, 12, {-1.0, 1.0}),
                 [=](auto&, auto x) { return weighted_sum(ad::clamp(x, -1.0, 1.0), w); });
  });
  suite.run("reshape", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto&, auto x) { return weighted_sum(ad::reshape(x, {2, 6}), w); });
  });
  suite.run("transpose", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto&, auto x) { return weighted_sum(ad::transpose(x), w); });
  });
  LX_UNARY_CASE("sum", (Shape{3, 4}), uniform_values(r, 12), ad::sum(x))
  LX_UNARY_CASE("mean", (Shape{3, 4}), uniform_values(r, 12), ad::mean(x))
  suite.run("sum along axis", [](Rng& r) {
    auto w = uniform_values(r, 6);
    return trial(Shape{2, 4, 3}, uniform_values(r, 24),
                 [=](auto&, auto x) { return weighted_sum(ad::sum(x, 1), w); });
  });
  suite.run("logsumexp axis 0", [](Rng& r) {
    auto w = uniform_values(r, 4);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto&, auto x) { return weighted_sum(ad::logsumexp(x, 0), w); });
  });
  suite.run("logsumexp axis 1", [](Rng& r) {
    auto w = uniform_values(r, 3);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto&, auto x) { return weighted_sum(ad::logsumexp(x, 1), w); });
  });
  suite.run("concat", [](Rng& r) {
    auto other = uniform_values(r, 6);
    auto w = uniform_values(r, 18);
    return trial(Shape{3, 4}, uniform_values(r, 12), [=](auto& tape, auto x) {
      using V = decltype(x);
      auto y = ad::concat(std::vector<V>{constant(tape, {3, 2}, other), x}, 1);
      return weighted_sum(y, w);
    });
  });
  suite.run("l2_normalize", [](Rng& r) {
    auto w = uniform_values(r, 12);
    return trial(Shape{3, 4}, uniform_values(r, 12),
                 [=](auto&, auto x) { return weighted_sum(ad::l2_normalize(x), w); });
  });
  suite.run("affine (input)", [](Rng& r) {
    auto wt = uniform_values(r, 15);
    auto b = uniform_values(r, 5);
    auto w = uniform_values(r, 10);
    return trial(Shape{2, 3}, uniform_values(r, 6), [=](auto& tape, auto x) {
      return weighted_sum(ad::affine(x, constant(tape, {5, 3}, wt), constant(tape, {5}, b)), w);
    });
  });
  suite.run("affine (weight)", [](Rng& r) {
    auto in = uniform_values(r, 6);
    auto b = uniform_values(r, 5);
    auto w = uniform_values(r, 10);
    return trial(Shape{5, 3}, uniform_values(r, 15), [=](auto& tape, auto x) {
      return weighted_sum(ad::affine(constant(tape, {2, 3}, in), x, constant(tape, {5}, b)), w);
    });
  });
  suite.run("affine (bias)", [](Rng& r) {
    auto in = uniform_values(r, 6);
    auto wt = uniform_values(r, 15);
    auto w = uniform_values(r, 10);
    return trial(Shape{5}, uniform_values(r, 5), [=](auto& tape, auto x) {
      return weighted_sum(ad::affine(constant(tape, {2, 3}, in), constant(tape, {5, 3}, wt), x), w);
    });
  });
  suite.run("conv1d (input)", [](Rng& r) {
    auto wt = uniform_values(r, 4 * 3 * 3);
    auto w = uniform_values(r, 2 * 4 * 5);
    return trial(Shape{2, 3, 9}, uniform_values(r, 54), [=](auto& tape, auto x) {
      return weighted_sum(ad::conv1d(x, constant(tape, {4, 3, 3}, wt), 2, 1), w);
    });
  });
  suite.run("conv1d (weight)", [](Rng& r) {
    auto in = uniform_values(r, 54);
    auto w = uniform_values(r, 2 * 4 * 5);
    return trial(Shape{4, 3, 3}, uniform_values(r, 36), [=](auto& tape, auto x) {
      return weighted_sum(ad::conv1d(constant(tape, {2, 3, 9}, in), x, 2, 1), w);
    });
  });
  suite.run("max_pool1d", [](Rng& r) {
    auto w = uniform_values(r, 2 * 3 * 4);
    return trial(Shape{2, 3, 9}, distinct_values(r, 54),
                 [=](auto&, auto x) { return weighted_sum(ad::max_pool1d(x, 3, 2), w); });
  });
  suite.run("global_avg_pool", [](Rng& r) {
    auto w = uniform_values(r, 6);
    return trial(Shape{2, 3, 5}, uniform_values(r, 30),
                 [=](auto&, auto x) { return weighted_sum(ad::global_avg_pool(x), w); });
  });
  for (bool training : {true, false}) {
    const std::string mode = training ? "train" : "eval";
    // Input, scale and shift are checked in turn; the other two stay fixed.
    for (int which = 0; which < 3; ++which) {
      static const char* kPart[] = {"input", "gamma", "beta"};
      suite.run("batch_norm " + mode + " (" + kPart[which] + ")", [training, which](Rng& r) {
        auto in = uniform_values(r, 4 * 3 * 5);
        auto gamma = uniform_values(r, 3, 0.5, 1.5);
        auto beta = uniform_values(r, 3);
        auto rmean = uniform_values(r, 3, -0.5, 0.5);
        auto rvar = uniform_values(r, 3, 0.5, 2.0);
        auto w = uniform_values(r, 60);
        const Shape xs{4, 3, 5}, cs{3};
        const auto& x0 = which == 0 ? in : which == 1 ? gamma : beta;
        return trial(which == 0 ? xs : cs, x0, [=](auto& tape, auto x) {
          auto c = [&](const Shape& s, const std::vector<double>& v) { return constant(tape, s, v); };
          auto xi = which == 0 ? x : c(xs, in);
          auto g = which == 1 ? x : c(cs, gamma);
          auto b = which == 2 ? x : c(cs, beta);
          using Scalar = std::remove_cv_t<std::remove_reference_t<decltype(x.value()[0])>>;
          ad::BasicTensor<Scalar> running_mean(cs, std::vector<Scalar>(rmean.begin(), rmean.end()));
          ad::BasicTensor<Scalar> running_var(cs, std::vector<Scalar>(rvar.begin(), rvar.end()));
          ad::BatchNormOptions opt;
          opt.training = training;
          return weighted_sum(ad::batch_norm(xi, g, b, running_mean, running_var, opt), w);
        });
      });
    }
  }
  suite.run("composite affine-relu-affine-sigmoid", [](Rng& r) {
    auto w1 = uniform_values(r, 6 * 4);
    auto b1 = uniform_values(r, 6);
    auto w2 = uniform_values(r, 3 * 6);
    auto b2 = uniform_values(r, 3);
    auto w = uniform_values(r, 2 * 3);
    return trial(Shape{2, 4}, uniform_values(r, 8), [=](auto& tape, auto x) {
      auto h = ad::relu(ad::affine(x, constant(tape, {6, 4}, w1), constant(tape, {6}, b1)));
      auto y = ad::sigmoid(ad::affine(h, constant(tape, {3, 6}, w2), constant(tape, {3}, b2)));
      return weighted_sum(y, w);
    });
  });

  // Losses.
  suite.run("bce_loss", [](Rng& r) {
    std::vector<double> y(12);
    for (auto& v : y) v = r.uniform() < 0.5 ? 0.0 : 1.0;
    return trial(Shape{3, 4}, uniform_values(r, 12, 0.05, 0.95), [=](auto& tape, auto x) {
      return loss::bce_loss(x, constant(tape, {3, 4}, y));
    });
  });
  suite.run("mkd_loss", [](Rng& r) {
    auto teacher = uniform_values(r, 12, 0.05, 0.95);
    return trial(Shape{3, 4}, uniform_values(r, 12, 0.05, 0.95), [=](auto& tape, auto x) {
      return loss::mkd_loss(constant(tape, {3, 4}, teacher), x, 1.5);
    });
  });
  for (int which = 0; which < 2; ++which) {
    suite.run(which == 0 ? "clt_infonce (anchors)" : "clt_infonce (positives)", [which](Rng& r) {
      auto other = unit_rows(r, 4, 16);
      auto negs = unit_rows(r, 8, 16);
      return trial(Shape{4, 16}, unit_rows(r, 4, 16), [=](auto& tape, auto x) {
        using Scalar = std::remove_cv_t<std::remove_reference_t<decltype(x.value()[0])>>;
        ad::BasicTensor<Scalar> n({8, 16}, std::vector<Scalar>(negs.begin(), negs.end()));
        auto o = constant(tape, {4, 16}, other);
        return which == 0 ? loss::clt_infonce(x, o, n, 0.07) : loss::clt_infonce(o, x, n, 0.07);
      });
    });
  }
  suite.run("clt_loss", [](Rng& r) {
    const std::uint64_t bank_seed = r.next_u64();
    const std::uint64_t draw_seed = r.next_u64();
    auto teacher = unit_rows(r, 4, 16);
    auto student_bank = std::make_shared<bank::MemoryBank>(40, bank_seed, 0.5, 16);
    auto teacher_bank = std::make_shared<bank::MemoryBank>(40, bank_seed + 1, 0.5, 16);
    std::vector<std::size_t> batch{3, 7, 11, 19};
    return trial(Shape{4, 16}, unit_rows(r, 4, 16), [=](auto& tape, auto x) {
      Rng draw(draw_seed);
      return loss::clt_loss(x, constant(tape, {4, 16}, teacher), *student_bank, *teacher_bank, batch, 16, 0.07,
                            draw);
    });
  });
  suite.run("combined_loss", [](Rng& r) {
    loss::LossWeights weights;
    weights.alpha = r.uniform(0.0, 2.0);
    weights.beta = r.uniform(0.0, 2.0);
    return trial(Shape{3}, uniform_values(r, 3, 0.0, 2.0), [=](auto& tape, auto x) {
      auto pick = [&](int i) {
        std::vector<double> e(3, 0.0);
        e[i] = 1.0;
        return ad::sum(ad::mul(x, constant(tape, {3}, e)));
      };
      return loss::combined_loss(pick(0), pick(1), pick(2), weights);
    });
  });

  auto report = suite.finish();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace leadxfer::loss
