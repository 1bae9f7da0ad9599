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

#include "leadxfer/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "leadxfer/util/errors.hpp"

namespace leadxfer::ad {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

template <typename T>
CMapR<T> cmap(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return CMapR<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <typename T>
MapR<T> mmap(std::span<T> s, std::size_t rows, std::size_t cols) {
  return MapR<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Sum of f(0..n-1) in eight index-strided lanes. Eigen's reductions peel to
// the data alignment, which makes their summation order depend on addresses.
template <typename T, typename F>
T lane_sum(std::size_t n, F f) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t k = 0; k < 8; ++k) acc[k] += f(i + k);
  }
  T tail = T(0);
  for (; i < n; ++i) tail += f(i);
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

// Splits `shape` around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};
AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  return out;
}

// Elementwise unary op given forward f(x) and derivative d(x, y).
template <typename T, typename F, typename D>
BasicVar<T> unary(BasicVar<T> x, F f, D d) {
  auto& tape = *x.tape;
  auto xv = x.value();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return tape.record(x.shape(), std::move(out), {x}, [x, d](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    if (gx.empty()) return;
    auto g = t.grad(self);
    auto xv = t.value(x.id);
    auto yv = t.value(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * d(xv[i], yv[i]);
  });
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
BasicVar<T> add(BasicVar<T> a, BasicVar<T> b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape->record(a.shape(), std::move(out), {a, b}, [a, b](BasicTape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    for (auto id : {a.id, b.id}) {
      auto gx = t.grad_mut(id);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    }
  });
}

template <typename T>
BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b) {
  if (a.shape() != b.shape()) mismatch("sub", a.shape(), b.shape());
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.tape->record(a.shape(), std::move(out), {a, b}, [a, b](BasicTape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    auto gb = t.grad_mut(b.id);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
  });
}

template <typename T>
BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b) {
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape->record(a.shape(), std::move(out), {a, b}, [a, b](BasicTape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    auto av = t.value(a.id), bv = t.value(b.id);
    auto ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    auto gb = t.grad_mut(b.id);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
  });
}

template <typename T>
BasicVar<T> scale(BasicVar<T> x, double factor) {
  const T c = static_cast<T>(factor);
  return unary(x, [c](T v) { return c * v; }, [c](T, T) { return c; });
}

template <typename T>
BasicVar<T> add_scalar(BasicVar<T> x, double offset) {
  const T c = static_cast<T>(offset);
  return unary(x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
BasicVar<T> relu(BasicVar<T> x) {
  return unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicVar<T> sigmoid(BasicVar<T> x) {
  return unary(x, [](T v) { return stable_sigmoid(v); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
BasicVar<T> exp(BasicVar<T> x) {
  return unary(x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
BasicVar<T> log(BasicVar<T> x) {
  for (T v : x.value()) {
    if (!(v > T(0))) throw std::domain_error("log: non-positive input " + std::to_string(static_cast<double>(v)));
  }
  return unary(x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
BasicVar<T> clamp(BasicVar<T> x, double lo, double hi) {
  const T l = static_cast<T>(lo), h = static_cast<T>(hi);
  return unary(
      x, [l, h](T v) { return std::min(std::max(v, l), h); },
      [l, h](T v, T) { return (v > l && v < h) ? T(1) : T(0); });
}

template <typename T>
BasicVar<T> reshape(BasicVar<T> x, Shape shape) {
  if (numel(shape) != x.size()) mismatch("reshape", x.shape(), shape);
  auto xv = x.value();
  return x.tape->record(std::move(shape), std::vector<T>(xv.begin(), xv.end()), {x},
                        [x](BasicTape<T>& t, std::size_t self) {
                          auto gx = t.grad_mut(x.id);
                          auto g = t.grad(self);
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
                        });
}

template <typename T>
BasicVar<T> matmul(BasicVar<T> a, BasicVar<T> b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) mismatch("matmul", as, bs);
  const std::size_t m = as[0], k = as[1], n = bs[1];
  std::vector<T> out(m * n);
  mmap<T>(out, m, n).noalias() = cmap(a.value(), m, k) * cmap(b.value(), k, n);
  return a.tape->record({m, n}, std::move(out), {a, b}, [a, b, m, k, n](BasicTape<T>& t, std::size_t self) {
    auto g = cmap(t.grad(self), m, n);
    if (auto ga = t.grad_mut(a.id); !ga.empty()) {
      mmap(ga, m, k).noalias() += g * cmap(t.value(b.id), k, n).transpose();
    }
    if (auto gb = t.grad_mut(b.id); !gb.empty()) {
      mmap(gb, k, n).noalias() += cmap(t.value(a.id), m, k).transpose() * g;
    }
  });
}

template <typename T>
BasicVar<T> transpose(BasicVar<T> a) {
  require_rank("transpose", a.shape(), 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<T> out(m * n);
  mmap<T>(out, n, m) = cmap(a.value(), m, n).transpose();
  return a.tape->record({n, m}, std::move(out), {a}, [a, m, n](BasicTape<T>& t, std::size_t self) {
    auto ga = t.grad_mut(a.id);
    mmap(ga, m, n) += cmap(t.grad(self), n, m).transpose();
  });
}

template <typename T>
BasicVar<T> affine(BasicVar<T> x, BasicVar<T> weight, BasicVar<T> bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1]) mismatch("affine", xs, ws);
  if (bias.shape() != Shape{ws[0]}) mismatch("affine bias", ws, bias.shape());
  const std::size_t batch = xs[0], in = xs[1], outd = ws[0];
  std::vector<T> out(batch * outd);
  auto y = mmap<T>(out, batch, outd);
  y.noalias() = cmap(x.value(), batch, in) * cmap(weight.value(), outd, in).transpose();
  auto bv = bias.value();
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t c = 0; c < outd; ++c) out[r * outd + c] += bv[c];
  }
  return x.tape->record({batch, outd}, std::move(out), {x, weight, bias},
                        [x, weight, bias, batch, in, outd](BasicTape<T>& t, std::size_t self) {
                          auto g = cmap(t.grad(self), batch, outd);
                          if (auto gx = t.grad_mut(x.id); !gx.empty()) {
                            mmap(gx, batch, in).noalias() += g * cmap(t.value(weight.id), outd, in);
                          }
                          if (auto gw = t.grad_mut(weight.id); !gw.empty()) {
                            mmap(gw, outd, in).noalias() += g.transpose() * cmap(t.value(x.id), batch, in);
                          }
                          if (auto gb = t.grad_mut(bias.id); !gb.empty()) {
                            auto gs = t.grad(self);
                            for (std::size_t r = 0; r < batch; ++r) {
                              for (std::size_t c = 0; c < outd; ++c) gb[c] += gs[r * outd + c];
                            }
                          }
                        });
}

template <typename T>
BasicVar<T> sum(BasicVar<T> x) {
  T acc = T(0);
  for (T v : x.value()) acc += v;
  return x.tape->record({}, {acc}, {x}, [x](BasicTape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    for (auto& v : t.grad_mut(x.id)) v += g;
  });
}

template <typename T>
BasicVar<T> mean(BasicVar<T> x) {
  const std::size_t n = x.size();
  T acc = T(0);
  for (T v : x.value()) acc += v;
  return x.tape->record({}, {acc / static_cast<T>(n)}, {x}, [x, n](BasicTape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0] / static_cast<T>(n);
    for (auto& v : t.grad_mut(x.id)) v += g;
  });
}

template <typename T>
BasicVar<T> sum(BasicVar<T> x, std::size_t axis) {
  const AxisSplit s = split_axis("sum", x.shape(), axis);
  auto xv = x.value();
  std::vector<T> out(s.outer * s.inner, T(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t e = 0; e < s.extent; ++e) {
      const T* src = xv.data() + (o * s.extent + e) * s.inner;
      T* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  return x.tape->record(drop_axis(x.shape(), axis), std::move(out), {x}, [x, s](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    auto g = t.grad(self);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < s.extent; ++e) {
        T* dst = gx.data() + (o * s.extent + e) * s.inner;
        const T* src = g.data() + o * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
BasicVar<T> logsumexp(BasicVar<T> x, std::size_t axis) {
  const AxisSplit s = split_axis("logsumexp", x.shape(), axis);
  auto xv = x.value();
  std::vector<T> out(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t e) { return xv[(o * s.extent + e) * s.inner + i]; };
      T m = -std::numeric_limits<T>::infinity();
      for (std::size_t e = 0; e < s.extent; ++e) m = std::max(m, at(e));
      T acc = T(0);
      for (std::size_t e = 0; e < s.extent; ++e) acc += std::exp(at(e) - m);
      out[o * s.inner + i] = m + std::log(acc);
    }
  }
  return x.tape->record(drop_axis(x.shape(), axis), std::move(out), {x}, [x, s](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    auto g = t.grad(self);
    auto xv = t.value(x.id);
    auto y = t.value(self);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t r = o * s.inner + i;
        for (std::size_t e = 0; e < s.extent; ++e) {
          const std::size_t k = (o * s.extent + e) * s.inner + i;
          gx[k] += g[r] * std::exp(xv[k] - y[r]);
        }
      }
    }
  });
}

template <typename T>
BasicVar<T> concat(const std::vector<BasicVar<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  Shape out_shape = first;
  split_axis("concat", first, axis);
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.size() != first.size()) mismatch("concat", first, ps);
    for (std::size_t d = 0; d < ps.size(); ++d) {
      if (d != axis && ps[d] != first[d]) mismatch("concat", first, ps);
    }
    out_shape[axis] += ps[axis];
  }
  const AxisSplit s = split_axis("concat", out_shape, axis);
  std::vector<T> out(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t w = p.shape()[axis] * s.inner;
    auto pv = p.value();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data() + o * w, w, out.data() + (o * s.extent) * s.inner + offset);
    }
    offset += w;
  }
  return parts.front().tape->record(
      out_shape, std::move(out), std::span<const BasicVar<T>>(parts),
      [parts, offsets, s, axis](BasicTape<T>& t, std::size_t self) {
        auto g = t.grad(self);
        for (std::size_t p = 0; p < parts.size(); ++p) {
          auto gp = t.grad_mut(parts[p].id);
          if (gp.empty()) continue;
          const std::size_t w = parts[p].shape()[axis] * s.inner;
          for (std::size_t o = 0; o < s.outer; ++o) {
            const T* src = g.data() + (o * s.extent) * s.inner + offsets[p];
            T* dst = gp.data() + o * w;
            for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename T>
BasicVar<T> l2_normalize(BasicVar<T> x) {
  const Shape& xs = x.shape();
  if (xs.empty()) throw ShapeError("l2_normalize: scalar input");
  const std::size_t d = xs.back();
  const std::size_t rows = x.size() / d;
  constexpr T kGuard = T(1e-12);
  auto xv = x.value();
  std::vector<T> out(xv.size());
  std::vector<T> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    T ss = T(0);
    for (std::size_t j = 0; j < d; ++j) ss += xv[r * d + j] * xv[r * d + j];
    norms[r] = std::sqrt(ss);
    const T inv = T(1) / (norms[r] + kGuard);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] * inv;
  }
  return x.tape->record(xs, std::move(out), {x}, [x, d, rows, norms](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    auto g = t.grad(self);
    auto xv = t.value(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const T s = norms[r] + kGuard;
      T dot = T(0);
      for (std::size_t j = 0; j < d; ++j) dot += g[r * d + j] * xv[r * d + j];
      const T coef = norms[r] > T(0) ? dot / (norms[r] * s * s) : T(0);
      for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[r * d + j] / s - xv[r * d + j] * coef;
    }
  });
}

namespace {

// Output positions o in [lo, hi) read input index o * stride + j - padding
// inside [0, len).
struct ValidRange {
  std::size_t lo, hi;
};

ValidRange valid_outputs(std::size_t j, std::size_t stride, std::size_t padding, std::size_t len, std::size_t lout) {
  std::size_t lo = 0;
  if (padding > j) lo = (padding - j + stride - 1) / stride;
  if (len + padding <= j) return {lo, lo};
  std::size_t hi = std::min(lout, (len + padding - j - 1) / stride + 1);
  return {std::min(lo, hi), hi};
}

}  // namespace

template <typename T>
BasicVar<T> conv1d(BasicVar<T> x, BasicVar<T> weight, std::size_t stride, std::size_t padding) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 3 || ws.size() != 3 || xs[1] != ws[1]) mismatch("conv1d", xs, ws);
  if (stride == 0) throw ShapeError("conv1d: stride must be positive");
  const std::size_t batch = xs[0], cin = xs[1], len = xs[2];
  const std::size_t cout = ws[0], k = ws[2];
  if (len + 2 * padding < k) mismatch("conv1d", xs, ws);
  const std::size_t lout = (len + 2 * padding - k) / stride + 1;
  const std::size_t rows = cin * k, cols = batch * lout;

  // col[(ci*K + j), b*Lout + o] = x[b, ci, o*stride + j - padding], 0 outside.
  auto col = std::make_shared<std::vector<T>>(rows * cols);
  auto xv = x.value();
  for (std::size_t j = 0; j < k; ++j) {
    const auto [lo, hi] = valid_outputs(j, stride, padding, len, lout);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      T* dst = col->data() + (ci * k + j) * cols;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* src = xv.data() + (b * cin + ci) * len + j - padding;  // index with o * stride
        T* d = dst + b * lout;
        std::fill(d, d + lo, T(0));
        if (stride == 1) {
          std::copy(src + lo, src + hi, d + lo);
        } else {
          for (std::size_t o = lo; o < hi; ++o) d[o] = src[o * stride];
        }
        std::fill(d + hi, d + lout, T(0));
      }
    }
  }
  MatR<T> prod = cmap(weight.value(), cout, rows) * cmap<T>(*col, rows, cols);
  std::vector<T> out(batch * cout * lout);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      std::copy_n(prod.data() + co * cols + b * lout, lout, out.data() + (b * cout + co) * lout);
    }
  }
  return x.tape->record(
      {batch, cout, lout}, std::move(out), {x, weight},
      [x, weight, col, batch, cin, len, cout, k, lout, rows, cols, stride, padding](BasicTape<T>& t, std::size_t self) {
        auto g = t.grad(self);
        MatR<T> gmat(cout, cols);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t co = 0; co < cout; ++co) {
            std::copy_n(g.data() + (b * cout + co) * lout, lout, gmat.data() + co * cols + b * lout);
          }
        }
        if (auto gw = t.grad_mut(weight.id); !gw.empty()) {
          mmap(gw, cout, rows).noalias() += gmat * cmap<T>(*col, rows, cols).transpose();
        }
        if (auto gx = t.grad_mut(x.id); !gx.empty()) {
          MatR<T> dcol = cmap(t.value(weight.id), cout, rows).transpose() * gmat;
          for (std::size_t j = 0; j < k; ++j) {
            const auto [lo, hi] = valid_outputs(j, stride, padding, len, lout);
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const T* src = dcol.data() + (ci * k + j) * cols;
              for (std::size_t b = 0; b < batch; ++b) {
                T* dst = gx.data() + (b * cin + ci) * len + j - padding;
                const T* s = src + b * lout;
                if (stride == 1) {
                  for (std::size_t o = lo; o < hi; ++o) dst[o] += s[o];
                } else {
                  for (std::size_t o = lo; o < hi; ++o) dst[o * stride] += s[o];
                }
              }
            }
          }
        }
      });
}

template <typename T>
BasicVar<T> max_pool1d(BasicVar<T> x, std::size_t kernel, std::size_t stride) {
  const Shape& xs = x.shape();
  require_rank("max_pool1d", xs, 3);
  if (kernel == 0 || stride == 0 || xs[2] < kernel) {
    throw ShapeError("max_pool1d: kernel " + std::to_string(kernel) + " does not fit " + shape_str(xs));
  }
  const std::size_t rows = xs[0] * xs[1], len = xs[2];
  const std::size_t lout = (len - kernel) / stride + 1;
  auto xv = x.value();
  std::vector<T> out(rows * lout);
  auto argmax = std::make_shared<std::vector<std::size_t>>(rows * lout);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < lout; ++o) {
      std::size_t best = r * len + o * stride;
      for (std::size_t j = 1; j < kernel; ++j) {
        const std::size_t p = r * len + o * stride + j;
        if (xv[p] > xv[best]) best = p;
      }
      out[r * lout + o] = xv[best];
      (*argmax)[r * lout + o] = best;
    }
  }
  return x.tape->record({xs[0], xs[1], lout}, std::move(out), {x}, [x, argmax](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    auto g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*argmax)[i]] += g[i];
  });
}

template <typename T>
BasicVar<T> global_avg_pool(BasicVar<T> x) {
  const Shape& xs = x.shape();
  require_rank("global_avg_pool", xs, 3);
  const std::size_t rows = xs[0] * xs[1], len = xs[2];
  auto xv = x.value();
  std::vector<T> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    T acc = T(0);
    for (std::size_t i = 0; i < len; ++i) acc += xv[r * len + i];
    out[r] = acc / static_cast<T>(len);
  }
  return x.tape->record({xs[0], xs[1]}, std::move(out), {x}, [x, rows, len](BasicTape<T>& t, std::size_t self) {
    auto gx = t.grad_mut(x.id);
    auto g = t.grad(self);
    for (std::size_t r = 0; r < rows; ++r) {
      const T v = g[r] / static_cast<T>(len);
      for (std::size_t i = 0; i < len; ++i) gx[r * len + i] += v;
    }
  });
}

template <typename T>
BasicVar<T> batch_norm(BasicVar<T> x, BasicVar<T> gamma, BasicVar<T> beta, BasicTensor<T>& running_mean,
                       BasicTensor<T>& running_var, const BatchNormOptions& options) {
  using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
  using CArr = Eigen::Map<const Arr>;
  using MArr = Eigen::Map<Arr>;
  const Shape& xs = x.shape();
  if (xs.size() != 2 && xs.size() != 3) throw ShapeError("batch_norm: expected [B, C] or [B, C, L], got " + shape_str(xs));
  const std::size_t batch = xs[0], ch = xs[1], len = xs.size() == 3 ? xs[2] : 1;
  const Shape cshape{ch};
  if (gamma.shape() != cshape) mismatch("batch_norm gamma", xs, gamma.shape());
  if (beta.shape() != cshape) mismatch("batch_norm beta", xs, beta.shape());
  if (running_mean.shape != cshape) mismatch("batch_norm running_mean", xs, running_mean.shape);
  if (running_var.shape != cshape) mismatch("batch_norm running_var", xs, running_var.shape);

  const std::size_t count = batch * len;
  const auto n = static_cast<Eigen::Index>(len);
  auto xv = x.value();
  auto gv = gamma.value(), bv = beta.value();
  auto slice = [&](std::size_t b, std::size_t c) { return CArr(xv.data() + (b * ch + c) * len, n); };
  std::vector<T> mu(ch), inv_std(ch);
  if (options.training) {
    for (std::size_t c = 0; c < ch; ++c) {
      T s = T(0);
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv.data() + (b * ch + c) * len;
        s += lane_sum<T>(len, [p](std::size_t i) { return p[i]; });
      }
      const T m = s / static_cast<T>(count);
      T ss = T(0);
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv.data() + (b * ch + c) * len;
        ss += lane_sum<T>(len, [p, m](std::size_t i) { return (p[i] - m) * (p[i] - m); });
      }
      const T var = ss / static_cast<T>(count);
      mu[c] = m;
      inv_std[c] = T(1) / std::sqrt(var + static_cast<T>(options.eps));
      const T unbiased = count > 1 ? ss / static_cast<T>(count - 1) : var;
      const T mom = static_cast<T>(options.momentum);
      running_mean.data[c] = mom * running_mean.data[c] + (T(1) - mom) * m;
      running_var.data[c] = mom * running_var.data[c] + (T(1) - mom) * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < ch; ++c) {
      mu[c] = running_mean.data[c];
      inv_std[c] = T(1) / std::sqrt(running_var.data[c] + static_cast<T>(options.eps));
    }
  }

  std::vector<T> out(xv.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      const T a = gv[c] * inv_std[c];
      MArr(out.data() + (b * ch + c) * len, n) = (slice(b, c) - mu[c]) * a + bv[c];
    }
  }
  const bool training = options.training;
  return x.tape->record(
      xs, std::move(out), {x, gamma, beta},
      [x, gamma, beta, mu, inv_std, batch, ch, len, count, training](BasicTape<T>& t, std::size_t self) {
        const auto n = static_cast<Eigen::Index>(len);
        auto g = t.grad(self);
        auto xv = t.value(x.id);
        auto gv = t.value(gamma.id);
        auto gx = t.grad_mut(x.id);
        auto gg = t.grad_mut(gamma.id);
        auto gb = t.grad_mut(beta.id);
        for (std::size_t c = 0; c < ch; ++c) {
          // sum_gx = sum g * xhat = inv_std * sum g * (x - mu)
          T sum_g = T(0), sum_gxc = T(0);
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t base = (b * ch + c) * len;
            const T* gp = g.data() + base;
            const T* xp = xv.data() + base;
            const T m = mu[c];
            sum_g += lane_sum<T>(len, [gp](std::size_t i) { return gp[i]; });
            sum_gxc += lane_sum<T>(len, [gp, xp, m](std::size_t i) { return gp[i] * (xp[i] - m); });
          }
          const T sum_gx = sum_gxc * inv_std[c];
          if (!gg.empty()) gg[c] += sum_gx;
          if (!gb.empty()) gb[c] += sum_g;
          if (gx.empty()) continue;
          const T k = gv[c] * inv_std[c];
          const T cnt = static_cast<T>(count);
          const T shift = sum_g / cnt;
          const T slope = sum_gx / cnt * inv_std[c];
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t base = (b * ch + c) * len;
            CArr gs(g.data() + base, n);
            MArr gxs(gx.data() + base, n);
            if (training) {
              gxs += k * (gs - shift - (CArr(xv.data() + base, n) - mu[c]) * slope);
            } else {
              gxs += k * gs;
            }
          }
        }
      });
}

#define LEADXFER_INSTANTIATE_OPS(T)                                                                          \
  template BasicVar<T> add(BasicVar<T>, BasicVar<T>);                                                        \
  template BasicVar<T> sub(BasicVar<T>, BasicVar<T>);                                                        \
  template BasicVar<T> mul(BasicVar<T>, BasicVar<T>);                                                        \
  template BasicVar<T> scale(BasicVar<T>, double);                                                           \
  template BasicVar<T> add_scalar(BasicVar<T>, double);                                                      \
  template BasicVar<T> relu(BasicVar<T>);                                                                    \
  template BasicVar<T> sigmoid(BasicVar<T>);                                                                 \
  template BasicVar<T> exp(BasicVar<T>);                                                                     \
  template BasicVar<T> log(BasicVar<T>);                                                                     \
  template BasicVar<T> clamp(BasicVar<T>, double, double);                                                   \
  template BasicVar<T> reshape(BasicVar<T>, Shape);                                                          \
  template BasicVar<T> matmul(BasicVar<T>, BasicVar<T>);                                                     \
  template BasicVar<T> transpose(BasicVar<T>);                                                               \
  template BasicVar<T> affine(BasicVar<T>, BasicVar<T>, BasicVar<T>);                                        \
  template BasicVar<T> sum(BasicVar<T>);                                                                     \
  template BasicVar<T> mean(BasicVar<T>);                                                                    \
  template BasicVar<T> sum(BasicVar<T>, std::size_t);                                                        \
  template BasicVar<T> logsumexp(BasicVar<T>, std::size_t);                                                  \
  template BasicVar<T> concat(const std::vector<BasicVar<T>>&, std::size_t);                                 \
  template BasicVar<T> l2_normalize(BasicVar<T>);                                                            \
  template BasicVar<T> conv1d(BasicVar<T>, BasicVar<T>, std::size_t, std::size_t);                           \
  template BasicVar<T> max_pool1d(BasicVar<T>, std::size_t, std::size_t);                                    \
  template BasicVar<T> global_avg_pool(BasicVar<T>);                                                         \
  template BasicVar<T> batch_norm(BasicVar<T>, BasicVar<T>, BasicVar<T>, BasicTensor<T>&, BasicTensor<T>&,   \
                                  const BatchNormOptions&);

LEADXFER_INSTANTIATE_OPS(float)
LEADXFER_INSTANTIATE_OPS(double)

}  // namespace leadxfer::ad
