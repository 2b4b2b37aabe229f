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

#include <vector>

#include "maskopt/rng.hpp"
#include "maskopt/tensor.hpp"

namespace maskopt {

// Normalized 1-D Gaussian taps, radius ceil(3 sigma). The 2-D kernel is the
// outer product of these with itself.
std::vector<double> gaussian_taps(double sigma);

// Per-channel 2-D Gaussian blur of a [C, H, W] image, clamp-to-edge borders.
template <typename Real>
BasicTensor<Real> gaussian_blur(const BasicTensor<Real>& img, double sigma);

// i.i.d. U[lo, hi) elements.
template <typename Real>
BasicTensor<Real> uniform_noise(const Shape& shape, double lo, double hi, Rng& rng);

// i.i.d. N(0, sigma^2) elements.
template <typename Real>
BasicTensor<Real> gaussian_noise(const Shape& shape, double sigma, Rng& rng);

extern template Tensor gaussian_blur(const Tensor&, double);
extern template TensorD gaussian_blur(const TensorD&, double);
extern template Tensor uniform_noise(const Shape&, double, double, Rng&);
extern template TensorD uniform_noise(const Shape&, double, double, Rng&);
extern template Tensor gaussian_noise(const Shape&, double, Rng&);
extern template TensorD gaussian_noise(const Shape&, double, Rng&);

}  // namespace maskopt
