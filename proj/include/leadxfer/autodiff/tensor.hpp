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
#include <string>
#include <vector>

namespace leadxfer::ad {

using Shape = std::vector<std::size_t>;

// Product of the dimensions; 1 for the scalar shape {}.
std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array. `grad` stays empty until a gradient is accumulated.
template <typename T>
struct BasicTensor {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;

  BasicTensor() = default;
  explicit BasicTensor(Shape s, T fill = T(0));
  BasicTensor(Shape s, std::vector<T> values);  // throws ShapeError on size mismatch

  std::size_t size() const { return data.size(); }
  void zero_grad() { grad.assign(data.size(), T(0)); }
};

using Tensor = BasicTensor<float>;

extern template struct BasicTensor<float>;
extern template struct BasicTensor<double>;

}  // namespace leadxfer::ad
