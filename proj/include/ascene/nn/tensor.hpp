// Copyright (c) 2026 The ascene Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ascene::nn {

/// Batch x height(time) x width(frequency) x channels.
struct Shape {
  int b = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(b) * h * w * c;
  }
  std::size_t per_item() const { return static_cast<std::size_t>(h) * w * c; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(b) + "," + std::to_string(h) + "," +
           std::to_string(w) + "," + std::to_string(c) + ")";
  }
};

/// Dense NHWC tensor, row-major with channels fastest.
template <class Real>
struct Tensor4 {
  Shape shape;
  std::vector<Real> data;

  Tensor4() = default;
  explicit Tensor4(Shape s, Real fill = Real(0))
      : shape(s), data(s.size(), fill) {}

  std::size_t index(int b, int h, int w, int c) const {
    return ((static_cast<std::size_t>(b) * shape.h + h) * shape.w + w) *
               shape.c + c;
  }
  Real& at(int b, int h, int w, int c) { return data[index(b, h, w, c)]; }
  Real at(int b, int h, int w, int c) const { return data[index(b, h, w, c)]; }
  Real* item(int b) { return data.data() + b * shape.per_item(); }
  const Real* item(int b) const { return data.data() + b * shape.per_item(); }

  void Reset(Shape s) {
    shape = s;
    data.assign(s.size(), Real(0));
  }
};

}  // namespace ascene::nn
