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

#include <cstddef>
#include <filesystem>
#include <vector>

#include "maskopt/rng.hpp"
#include "maskopt/tensor.hpp"

namespace maskopt {

// Per-channel affine normalization of [0, 1] images: (v - mean) / stddev.
// The all-zero normalized image is therefore the data-mean colour.
struct Normalization {
  std::vector<float> mean;
  std::vector<float> stddev;

  std::size_t channels() const { return mean.size(); }
  Tensor normalize(const Tensor& unit_image) const;
  Tensor denormalize(const Tensor& image) const;
  // Raw [0, 1] black image in normalized coordinates.
  Tensor black(const Shape& shape) const;

  static Normalization identity(std::size_t channels);
  static Normalization fit(const std::vector<Tensor>& unit_images);

  bool operator==(const Normalization&) const = default;
};

struct Dataset {
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  const Shape& image_shape() const { return images.at(0).shape(); }

  Dataset slice(std::size_t begin, std::size_t count) const;
  Dataset normalized(const Normalization& norm) const;
};

// Loads an IDX image/label pair as [1, H, W] images scaled to [0, 1].
// Labels must be < num_classes.
Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels, std::size_t num_classes = 10);

// Conventional file names inside a dataset directory:
// {split}-images-idx3-ubyte and {split}-labels-idx1-ubyte.
Dataset load_idx_split(const std::filesystem::path& dir, const char* split,
                       std::size_t num_classes = 10);

// Turns a grey [1, H, W] dataset into a 3-channel (BGR) one: every image is
// tinted by a per-class base colour with per-image jitter. Used for the
// colour-channel experiments.
Dataset colorize(const Dataset& grey, std::uint64_t seed);

}  // namespace maskopt
