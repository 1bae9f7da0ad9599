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

#include "leadxfer/autodiff/tape.hpp"

#include <numeric>
#include <stdexcept>

#include "leadxfer/util/errors.hpp"

namespace leadxfer::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape s, T fill) : shape(std::move(s)), data(numel(shape), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != numel(shape)) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(data.size()) + " values");
  }
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::constant(BasicTensor<T> value) {
  nodes_.push_back(Node{std::move(value.shape), std::move(value.data), {}, false, nullptr, {}});
  return Var{this, nodes_.size() - 1};
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::leaf(BasicTensor<T> value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value.shape), std::move(value.data), {}, requires_grad, nullptr, {}});
  return Var{this, nodes_.size() - 1};
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::bind(BasicTensor<T>& external) {
  nodes_.push_back(Node{external.shape, external.data, {}, external.requires_grad, &external, {}});
  return Var{this, nodes_.size() - 1};
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::record(Shape shape, std::vector<T> value, std::initializer_list<Var> inputs,
                                                BackwardFn fn) {
  return record(std::move(shape), std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::record(Shape shape, std::vector<T> value, std::span<const Var> inputs,
                                                BackwardFn fn) {
  if (value.size() != numel(shape)) throw ShapeError("record: value does not match " + shape_str(shape));
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw std::invalid_argument("record: input belongs to another tape");
    needs = needs || nodes_[v.id].requires_grad;
  }
  Node node{std::move(shape), std::move(value), {}, needs, nullptr, {}};
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

template <typename T>
std::span<T> BasicTape<T>::grad_mut(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
  return n.grad;
}

template <typename T>
void BasicTape<T>::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss belongs to another tape");
  if (backward_done_) throw std::logic_error("backward: already called on this tape");
  const Node& root = nodes_[loss.id];
  if (root.value.size() != 1) throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(root.shape));
  if (!root.requires_grad) throw std::invalid_argument("backward: loss is detached from every differentiable leaf");
  backward_done_ = true;

  grad_mut(loss.id)[0] = T(1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (!n.requires_grad || n.backward) continue;
    if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
    if (n.bound) {
      auto& g = n.bound->grad;
      if (g.size() != n.grad.size()) g.assign(n.grad.size(), T(0));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }
}

template struct BasicTensor<float>;
template struct BasicTensor<double>;
template class BasicTape<float>;
template class BasicTape<double>;

}  // namespace leadxfer::ad
