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
#include <json.hpp>
#include <span>

#include "leadxfer/autodiff/tape.hpp"
#include "leadxfer/bank/memory_bank.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::loss {

using ad::BasicTensor;
using ad::BasicVar;

// Weights of the combined objective bce + alpha * mkd + beta * clt, and the
// two temperatures.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 0.07;     // contrastive temperature
  double tau_kd = 1.5;   // distillation temperature

  void validate() const;  // throws ConfigError
  bool operator==(const LossWeights&) const = default;
};

inline constexpr double kProbClamp = 1e-7;

// Mean over batch and classes of -[y log p + (1-y) log(1-p)], p clamped to
// [1e-7, 1 - 1e-7].
template <typename T>
BasicVar<T> bce_loss(BasicVar<T> probs, BasicVar<T> labels);

// Binary temperature softmax of (p, 1-p): e^{p/t} / (e^{p/t} + e^{(1-p)/t}),
// which equals sigmoid((2p - 1) / t).
double mkd_q(double p, double tau_kd);
template <typename T>
BasicVar<T> mkd_q(BasicVar<T> p, double tau_kd);

// tau_kd^2 * mean over the batch of sum over classes of KL(Bern(q_T) || Bern(q_S)).
// The teacher side is detached: gradients reach p_student only.
template <typename T>
BasicVar<T> mkd_loss(BasicVar<T> p_teacher, BasicVar<T> p_student, double tau_kd);

// One direction of the contrastive loss: mean over rows b of
//   -log( e^{<a_b,p_b>/tau} / (e^{<a_b,p_b>/tau} + sum_m e^{<a_b,n_m>/tau}) ).
// `negatives` [N x d] are constants. Rows must have unit norm within 1e-3.
template <typename T>
BasicVar<T> clt_infonce(BasicVar<T> anchors, BasicVar<T> positives, const BasicTensor<T>& negatives, double tau);

// Symmetric contrastive transfer loss:
//   0.5 * [ infonce(student, teacher, N teacher-bank rows)
//         + infonce(teacher, student, N student-bank rows) ]
// Negatives are drawn uniformly without replacement, excluding the batch,
// teacher bank first. The teacher embeddings are detached.
template <typename T>
BasicVar<T> clt_loss(BasicVar<T> student_emb, BasicVar<T> teacher_emb, const bank::MemoryBank& student_bank,
                     const bank::MemoryBank& teacher_bank, std::span<const std::size_t> batch_indices,
                     std::size_t n_negatives, double tau, Rng& rng);

// bce + alpha * mkd + beta * clt. Terms with a zero weight are left off the
// graph entirely. Throws std::domain_error naming a non-finite component.
template <typename T>
BasicVar<T> combined_loss(BasicVar<T> bce, BasicVar<T> mkd, BasicVar<T> clt, const LossWeights& weights);

}  // namespace leadxfer::loss
