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

#include "maskopt/dataset.hpp"

#include <array>
#include <cmath>

#include "maskopt/io/idx.hpp"

namespace maskopt {

Tensor Normalization::normalize(const Tensor& unit_image) const {
  if (unit_image.rank() != 3 || unit_image.dim(0) != channels())
    throw ShapeError("normalize: channel count mismatch");
  Tensor out(unit_image.shape());
  const std::size_t plane = unit_image.dim(1) * unit_image.dim(2);
  for (std::size_t c = 0; c < channels(); ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out[c * plane + i] = (unit_image[c * plane + i] - mean[c]) / stddev[c];
  return out;
}

Tensor Normalization::denormalize(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != channels())
    throw ShapeError("denormalize: channel count mismatch");
  Tensor out(image.shape());
  const std::size_t plane = image.dim(1) * image.dim(2);
  for (std::size_t c = 0; c < channels(); ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out[c * plane + i] = image[c * plane + i] * stddev[c] + mean[c];
  return out;
}

Tensor Normalization::black(const Shape& shape) const {
  return normalize(Tensor::zeros(shape));
}

Normalization Normalization::identity(std::size_t channels) {
  return {std::vector<float>(channels, 0.0f), std::vector<float>(channels, 1.0f)};
}

Normalization Normalization::fit(const std::vector<Tensor>& unit_images) {
  if (unit_images.empty()) throw ArgumentError("Normalization::fit: no images");
  const std::size_t channels = unit_images[0].dim(0);
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  std::size_t count = 0;
  for (const auto& img : unit_images) {
    const std::size_t plane = img.dim(1) * img.dim(2);
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = img[c * plane + i];
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    count += plane;
  }
  Normalization norm;
  for (std::size_t c = 0; c < channels; ++c) {
    const double m = sum[c] / count;
    const double var = std::max(sq[c] / count - m * m, 1e-12);
    norm.mean.push_back(static_cast<float>(m));
    norm.stddev.push_back(static_cast<float>(std::sqrt(var)));
  }
  return norm;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  Dataset out;
  out.num_classes = num_classes;
  const std::size_t end = std::min(size(), begin + count);
  for (std::size_t i = std::min(begin, end); i < end; ++i) {
    out.images.push_back(images[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

Dataset Dataset::normalized(const Normalization& norm) const {
  Dataset out;
  out.num_classes = num_classes;
  out.labels = labels;
  out.images.reserve(size());
  for (const auto& img : images) out.images.push_back(norm.normalize(img));
  return out;
}

Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels, std::size_t num_classes) {
  const auto image_bytes = io::read_file(images);
  const auto label_bytes = io::read_file(labels);
  Dataset ds;
  ds.num_classes = num_classes;
  ds.images = io::idx_images(io::parse_idx(image_bytes));
  ds.labels = io::idx_labels(io::parse_idx(label_bytes));
  if (ds.images.size() != ds.labels.size())
    throw FormatError("dataset: " + std::to_string(ds.images.size()) + " images but " +
                      std::to_string(ds.labels.size()) + " labels");
  for (std::size_t l : ds.labels)
    if (l >= num_classes) throw FormatError("dataset: label " + std::to_string(l) + " out of range");
  for (auto& img : ds.images)
    for (auto& v : img.values()) v /= 255.0f;
  return ds;
}

Dataset load_idx_split(const std::filesystem::path& dir, const char* split,
                       std::size_t num_classes) {
  const std::string s(split);
  return load_idx_dataset(dir / (s + "-images-idx3-ubyte"), dir / (s + "-labels-idx1-ubyte"),
                          num_classes);
}

Dataset colorize(const Dataset& grey, std::uint64_t seed) {
  // BGR base colours; classes 0 and 1 are achromatic and therefore invariant
  // under any channel permutation.
  static constexpr std::array<std::array<float, 3>, 10> kPalette{{
      {1.0f, 1.0f, 1.0f},
      {0.6f, 0.6f, 0.6f},
      {0.1f, 0.9f, 1.0f},
      {1.0f, 0.2f, 0.1f},
      {0.2f, 1.0f, 0.2f},
      {0.1f, 0.2f, 1.0f},
      {1.0f, 0.1f, 1.0f},
      {1.0f, 1.0f, 0.1f},
      {0.5f, 0.9f, 0.4f},
      {0.3f, 0.5f, 1.0f},
  }};
  Rng rng(seed);
  Dataset out;
  out.num_classes = grey.num_classes;
  out.labels = grey.labels;
  for (std::size_t i = 0; i < grey.size(); ++i) {
    const Tensor& g = grey.images[i];
    if (g.rank() != 3 || g.dim(0) != 1) throw ShapeError("colorize: expected [1, H, W] images");
    const auto& base = kPalette[grey.labels[i] % kPalette.size()];
    std::array<float, 3> tint;
    for (std::size_t c = 0; c < 3; ++c)
      tint[c] = std::clamp(base[c] + static_cast<float>(rng.uniform(-0.1, 0.1)), 0.0f, 1.0f);
    Tensor rgb({3, g.dim(1), g.dim(2)});
    const std::size_t plane = g.dim(1) * g.dim(2);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < plane; ++p) rgb[c * plane + p] = g[p] * tint[c];
    out.images.push_back(std::move(rgb));
  }
  return out;
}

}  // namespace maskopt
