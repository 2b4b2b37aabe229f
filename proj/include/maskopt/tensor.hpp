/*
 * Copyright 2026 The maskopt Authors.
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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "maskopt/error.hpp"

namespace maskopt {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major N-d array. Images are [C, H, W]; conv kernels are
// [out, in, kh, kw]. Engine math runs on float, oracles on double.
template <typename Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor ones(Shape shape) {
    return BasicTensor(std::move(shape), Real(1));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  // [C, H, W] accessors.
  Real& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const Real& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  BasicTensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    }
    return BasicTensor(std::move(shape), data_);
  }

  template <typename Other>
  BasicTensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return BasicTensor<Other>(shape_, std::move(out));
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  // Exact element-wise equality (shape included). Used for the bitwise
  // reproducibility checks.
  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename Real>
void require_same_shape(const BasicTensor<Real>& a, const BasicTensor<Real>& b,
                        const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

template <typename Real, typename F>
BasicTensor<Real> map(const BasicTensor<Real>& a, F&& f) {
  BasicTensor<Real> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename Real, typename F>
BasicTensor<Real> map_zip(const BasicTensor<Real>& a, const BasicTensor<Real>& b,
                          F&& f) {
  require_same_shape(a, b, "map_zip");
  BasicTensor<Real> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

enum class Reduction { sum, max_abs, max, min };

template <typename Real>
Real reduce(const BasicTensor<Real>& a, Reduction kind) {
  if (a.empty()) throw ArgumentError("reduce: empty tensor");
  auto v = a.values();
  switch (kind) {
    case Reduction::sum:
      return std::accumulate(v.begin(), v.end(), Real(0));
    case Reduction::max_abs: {
      Real m = 0;
      for (Real x : v) m = std::max(m, std::abs(x));
      return m;
    }
    case Reduction::max:
      return *std::max_element(v.begin(), v.end());
    case Reduction::min:
      return *std::min_element(v.begin(), v.end());
  }
  return Real(0);
}

template <typename Real>
BasicTensor<Real> clamp01(const BasicTensor<Real>& a) {
  return map(a, [](Real v) { return std::clamp(v, Real(0), Real(1)); });
}

template <typename Real>
bool all_finite(const BasicTensor<Real>& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](Real v) { return std::isfinite(v); });
}

}  // namespace maskopt
