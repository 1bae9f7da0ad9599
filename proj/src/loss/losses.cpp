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

#include "leadxfer/loss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/util/errors.hpp"

namespace leadxfer::loss {

namespace {

template <typename T>
void require_same(const char* op, BasicVar<T> a, BasicVar<T> b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + ad::shape_str(a.shape()) + " and " + ad::shape_str(b.shape()));
  }
}

template <typename T>
void require_unit_rows(const char* what, std::span<const T> values, std::size_t dim) {
  for (std::size_t r = 0; r * dim < values.size(); ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < dim; ++j) ss += static_cast<double>(values[r * dim + j]) * values[r * dim + j];
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-3) {
      throw std::invalid_argument(std::string("clt_infonce: ") + what + " row " + std::to_string(r) +
                                  " has norm " + std::to_string(std::sqrt(ss)));
    }
  }
}

template <typename T>
BasicVar<T> detach(BasicVar<T> v) {
  auto values = v.value();
  return v.tape->constant(v.shape(), std::vector<T>(values.begin(), values.end()));
}

template <typename T>
void require_finite(const char* name, BasicVar<T> v) {
  if (!std::isfinite(static_cast<double>(v.item()))) {
    throw std::domain_error(std::string("non-finite ") + name + " loss: " + std::to_string(static_cast<double>(v.item())));
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("beta", "must be >= 0");
  if (!(tau > 0.0)) throw ConfigError("tau", "must be > 0");
  if (!(tau_kd > 0.0)) throw ConfigError("tau_kd", "must be > 0");
}

template <typename T>
BasicVar<T> bce_loss(BasicVar<T> probs, BasicVar<T> labels) {
  require_same("bce_loss", probs, labels);
  auto p = ad::clamp(probs, kProbClamp, 1.0 - kProbClamp);
  auto one_minus_y = ad::add_scalar(ad::scale(labels, -1.0), 1.0);
  auto one_minus_p = ad::add_scalar(ad::scale(p, -1.0), 1.0);
  auto ll = ad::add(ad::mul(labels, ad::log(p)), ad::mul(one_minus_y, ad::log(one_minus_p)));
  return ad::scale(ad::mean(ll), -1.0);
}

double mkd_q(double p, double tau_kd) {
  const double z = (2.0 * p - 1.0) / tau_kd;
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

template <typename T>
BasicVar<T> mkd_q(BasicVar<T> p, double tau_kd) {
  return ad::sigmoid(ad::scale(ad::add_scalar(ad::scale(p, 2.0), -1.0), 1.0 / tau_kd));
}

template <typename T>
BasicVar<T> mkd_loss(BasicVar<T> p_teacher, BasicVar<T> p_student, double tau_kd) {
  require_same("mkd_loss", p_teacher, p_student);
  if (p_student.shape().empty()) throw ShapeError("mkd_loss: expected [B, C] probabilities");
  auto& tape = *p_student.tape;
  const std::size_t batch = p_student.shape()[0];

  // Teacher side as plain values: q_T and its negative entropy terms.
  auto pt = p_teacher.value();
  std::vector<T> qt(pt.size()), one_minus_qt(pt.size()), neg_entropy(pt.size());
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pt[i]), kProbClamp, 1.0 - kProbClamp);
    const double q = mkd_q(p, tau_kd);
    qt[i] = static_cast<T>(q);
    one_minus_qt[i] = static_cast<T>(1.0 - q);
    neg_entropy[i] = static_cast<T>(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
  }
  const ad::Shape shape = p_student.shape();
  auto qt_v = tape.constant(shape, std::move(qt));
  auto one_minus_qt_v = tape.constant(shape, std::move(one_minus_qt));
  auto neg_entropy_v = tape.constant(shape, std::move(neg_entropy));

  auto qs = mkd_q(ad::clamp(p_student, kProbClamp, 1.0 - kProbClamp), tau_kd);
  auto one_minus_qs = ad::add_scalar(ad::scale(qs, -1.0), 1.0);
  auto cross = ad::add(ad::mul(qt_v, ad::log(qs)), ad::mul(one_minus_qt_v, ad::log(one_minus_qs)));
  auto kl = ad::sub(neg_entropy_v, cross);
  return ad::scale(ad::sum(kl), tau_kd * tau_kd / static_cast<double>(batch));
}

template <typename T>
BasicVar<T> clt_infonce(BasicVar<T> anchors, BasicVar<T> positives, const BasicTensor<T>& negatives, double tau) {
  require_same("clt_infonce", anchors, positives);
  const auto& as = anchors.shape();
  if (as.size() != 2) throw ShapeError("clt_infonce: expected [B, d] anchors, got " + ad::shape_str(as));
  const std::size_t batch = as[0], dim = as[1];
  if (negatives.shape.size() != 2 || negatives.shape[1] != dim) {
    throw ShapeError("clt_infonce: negatives " + ad::shape_str(negatives.shape) + " do not match anchors " +
                     ad::shape_str(as));
  }
  if (negatives.shape[0] == 0) throw std::invalid_argument("clt_infonce: at least one negative is required");
  if (!(tau > 0)) throw std::invalid_argument("clt_infonce: tau must be positive");
  require_unit_rows<T>("anchor", anchors.value(), dim);
  require_unit_rows<T>("positive", positives.value(), dim);
  require_unit_rows<T>("negative", negatives.data, dim);

  auto& tape = *anchors.tape;
  auto negs = tape.constant(BasicTensor<T>(negatives.shape, negatives.data));
  auto pos = ad::reshape(ad::sum(ad::mul(anchors, positives), 1), {batch, 1});
  auto neg = ad::matmul(anchors, ad::transpose(negs));
  auto logits = ad::scale(ad::concat<T>({pos, neg}, 1), 1.0 / tau);
  auto lse = ad::logsumexp(logits, 1);
  auto nll = ad::sub(lse, ad::scale(ad::reshape(pos, {batch}), 1.0 / tau));
  return ad::mean(nll);
}

template <typename T>
BasicVar<T> clt_loss(BasicVar<T> student_emb, BasicVar<T> teacher_emb, const bank::MemoryBank& student_bank,
                     const bank::MemoryBank& teacher_bank, std::span<const std::size_t> batch_indices,
                     std::size_t n_negatives, double tau, Rng& rng) {
  require_same("clt_loss", student_emb, teacher_emb);
  if (batch_indices.size() != student_emb.shape()[0]) {
    throw ShapeError("clt_loss: " + std::to_string(batch_indices.size()) + " batch indices for " +
                     ad::shape_str(student_emb.shape()));
  }
  auto to_t = [](const ad::Tensor& t) {
    return BasicTensor<T>(t.shape, std::vector<T>(t.data.begin(), t.data.end()));
  };
  const auto teacher_negs = to_t(teacher_bank.sample(n_negatives, batch_indices, rng));
  const auto student_negs = to_t(student_bank.sample(n_negatives, batch_indices, rng));
  auto teacher = detach(teacher_emb);
  auto s_to_t = clt_infonce(student_emb, teacher, teacher_negs, tau);
  auto t_to_s = clt_infonce(teacher, student_emb, student_negs, tau);
  return ad::scale(ad::add(s_to_t, t_to_s), 0.5);
}

template <typename T>
BasicVar<T> combined_loss(BasicVar<T> bce, BasicVar<T> mkd, BasicVar<T> clt, const LossWeights& weights) {
  require_finite("bce", bce);
  require_finite("mkd", mkd);
  require_finite("clt", clt);
  auto total = bce;
  if (weights.alpha != 0.0) total = ad::add(total, ad::scale(mkd, weights.alpha));
  if (weights.beta != 0.0) total = ad::add(total, ad::scale(clt, weights.beta));
  return total;
}

#define LEADXFER_INSTANTIATE_LOSSES(T)                                                                        \
  template BasicVar<T> bce_loss(BasicVar<T>, BasicVar<T>);                                                    \
  template BasicVar<T> mkd_q(BasicVar<T>, double);                                                            \
  template BasicVar<T> mkd_loss(BasicVar<T>, BasicVar<T>, double);                                            \
  template BasicVar<T> clt_infonce(BasicVar<T>, BasicVar<T>, const BasicTensor<T>&, double);                  \
  template BasicVar<T> clt_loss(BasicVar<T>, BasicVar<T>, const bank::MemoryBank&, const bank::MemoryBank&,   \
                                std::span<const std::size_t>, std::size_t, double, Rng&);                     \
  template BasicVar<T> combined_loss(BasicVar<T>, BasicVar<T>, BasicVar<T>, const LossWeights&);

LEADXFER_INSTANTIATE_LOSSES(float)
LEADXFER_INSTANTIATE_LOSSES(double)

}  // namespace leadxfer::loss
