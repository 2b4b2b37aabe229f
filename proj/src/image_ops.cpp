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

#include "maskopt/image_ops.hpp"

#include <cmath>

namespace maskopt {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian_blur: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[i + radius] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

template <typename Real>
BasicTensor<Real> gaussian_blur(const BasicTensor<Real>& img, double sigma) {
  if (img.rank() != 3) throw ShapeError("gaussian_blur: expected [C, H, W]");
  const auto taps = gaussian_taps(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  const int channels = static_cast<int>(img.dim(0));
  const int height = static_cast<int>(img.dim(1));
  const int width = static_cast<int>(img.dim(2));

  // Separable pass in double: rows then columns.
  std::vector<double> rows(img.size());
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int xx = std::clamp(x + k, 0, width - 1);
          acc += taps[k + radius] * img.at(c, y, xx);
        }
        rows[(c * height + y) * width + x] = acc;
      }
    }
  }
  BasicTensor<Real> out(img.shape());
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int yy = std::clamp(y + k, 0, height - 1);
          acc += taps[k + radius] * rows[(c * height + yy) * width + x];
        }
        out.at(c, y, x) = static_cast<Real>(acc);
      }
    }
  }
  return out;
}

template <typename Real>
BasicTensor<Real> uniform_noise(const Shape& shape, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw ArgumentError("uniform_noise: requires lo < hi");
  BasicTensor<Real> out(shape);
  for (auto& v : out.values()) {
    v = static_cast<Real>(rng.uniform(lo, hi));
    // Rounding to float can land exactly on hi.
    if (v >= static_cast<Real>(hi)) v = std::nextafter(static_cast<Real>(hi), static_cast<Real>(lo));
  }
  return out;
}

template <typename Real>
BasicTensor<Real> gaussian_noise(const Shape& shape, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ArgumentError("gaussian_noise: sigma must be >= 0");
  BasicTensor<Real> out(shape);
  for (auto& v : out.values()) v = static_cast<Real>(sigma * rng.normal());
  return out;
}

template Tensor gaussian_blur(const Tensor&, double);
template TensorD gaussian_blur(const TensorD&, double);
template Tensor uniform_noise(const Shape&, double, double, Rng&);
template TensorD uniform_noise(const Shape&, double, double, Rng&);
template Tensor gaussian_noise(const Shape&, double, Rng&);
template TensorD gaussian_noise(const Shape&, double, Rng&);

}  // namespace maskopt
