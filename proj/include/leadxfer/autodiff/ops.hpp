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

#pragma once

#include <cstddef>
#include <vector>

#include "leadxfer/autodiff/tape.hpp"

// Differentiable operations. Every function records one node on the tape of
// its inputs and throws ShapeError naming both shapes on a mismatch.
namespace leadxfer::ad {

// Elementwise, identical shapes.
template <typename T> BasicVar<T> add(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> scale(BasicVar<T> x, double factor);
template <typename T> BasicVar<T> add_scalar(BasicVar<T> x, double offset);

template <typename T> BasicVar<T> relu(BasicVar<T> x);
template <typename T> BasicVar<T> sigmoid(BasicVar<T> x);
template <typename T> BasicVar<T> exp(BasicVar<T> x);
// Throws std::domain_error for a non-positive entry.
template <typename T> BasicVar<T> log(BasicVar<T> x);
// Gradient passes only where lo < x < hi.
template <typename T> BasicVar<T> clamp(BasicVar<T> x, double lo, double hi);

template <typename T> BasicVar<T> reshape(BasicVar<T> x, Shape shape);

// [m, k] x [k, n] -> [m, n]
template <typename T> BasicVar<T> matmul(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> transpose(BasicVar<T> a);
// x [B, in] , weight [out, in], bias [out] -> [B, out]
template <typename T> BasicVar<T> affine(BasicVar<T> x, BasicVar<T> weight, BasicVar<T> bias);

// Reductions. The full reductions return the scalar shape {}.
template <typename T> BasicVar<T> sum(BasicVar<T> x);
template <typename T> BasicVar<T> mean(BasicVar<T> x);
template <typename T> BasicVar<T> sum(BasicVar<T> x, std::size_t axis);
// log(sum(exp(x))) along `axis`, shifted by the running max.
template <typename T> BasicVar<T> logsumexp(BasicVar<T> x, std::size_t axis);
template <typename T> BasicVar<T> concat(const std::vector<BasicVar<T>>& parts, std::size_t axis);
// x / (||x||_2 + 1e-12) along the last axis.
template <typename T> BasicVar<T> l2_normalize(BasicVar<T> x);

// x [B, Cin, L], weight [Cout, Cin, K] -> [B, Cout, (L + 2*padding - K) / stride + 1]
template <typename T>
BasicVar<T> conv1d(BasicVar<T> x, BasicVar<T> weight, std::size_t stride = 1, std::size_t padding = 0);
// x [B, C, L] -> [B, C, (L - kernel) / stride + 1]
template <typename T> BasicVar<T> max_pool1d(BasicVar<T> x, std::size_t kernel, std::size_t stride);
// x [B, C, L] -> [B, C]
template <typename T> BasicVar<T> global_avg_pool(BasicVar<T> x);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double eps = 1e-5;
};

// Per-channel normalisation of x [B, C] or [B, C, L] with statistics over the
// batch (and time) axes. Training mode normalises with batch statistics and
// updates the running buffers (unbiased variance); inference mode uses them.
template <typename T>
BasicVar<T> batch_norm(BasicVar<T> x, BasicVar<T> gamma, BasicVar<T> beta, BasicTensor<T>& running_mean,
                       BasicTensor<T>& running_var, const BatchNormOptions& options = {});

}  // namespace leadxfer::ad
