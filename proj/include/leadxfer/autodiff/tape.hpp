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
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "leadxfer/autodiff/tensor.hpp"

namespace leadxfer::ad {

template <typename T>
class BasicTape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
struct BasicVar {
  BasicTape<T>* tape = nullptr;
  std::size_t id = 0;

  const Shape& shape() const { return tape->shape(id); }
  std::span<const T> value() const { return tape->value(id); }
  std::size_t size() const { return tape->value(id).size(); }
  bool requires_grad() const { return tape->requires_grad(id); }
  T item() const { return tape->value(id)[0]; }
};

// Reverse-mode tape. Operations append nodes in evaluation order; backward()
// walks them in exact reverse order. A tape belongs to one thread.
template <typename T>
class BasicTape {
 public:
  using Var = BasicVar<T>;
  // Called during backward with the id of the node being differentiated.
  using BackwardFn = std::function<void(BasicTape&, std::size_t)>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  Var constant(BasicTensor<T> value);
  Var constant(Shape shape, std::vector<T> values) { return constant(BasicTensor<T>(std::move(shape), std::move(values))); }
  Var leaf(BasicTensor<T> value, bool requires_grad = true);
  // Leaf mirroring `external`; when external.requires_grad, backward() adds the
  // gradient into external.grad. `external` must outlive the backward call.
  Var bind(BasicTensor<T>& external);

  Var record(Shape shape, std::vector<T> value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Shape shape, std::vector<T> value, std::span<const Var> inputs, BackwardFn fn);

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
  std::span<const T> value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient of node `id`; empty if it does not require a gradient or none reached it.
  std::span<const T> grad(std::size_t id) const { return nodes_[id].grad; }
  std::span<const T> grad(Var v) const { return grad(v.id); }
  // Mutable gradient buffer, zero-allocated on first use. Empty when the node
  // does not require a gradient, so callers can skip that input.
  std::span<T> grad_mut(std::size_t id);

  // Throws std::invalid_argument for a non-scalar loss or a loss that does not
  // depend on any differentiable leaf, std::logic_error on a second call.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
    BasicTensor<T>* bound = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

using Tape = BasicTape<float>;
using Var = BasicVar<float>;

extern template class BasicTape<float>;
extern template class BasicTape<double>;

}  // namespace leadxfer::ad
