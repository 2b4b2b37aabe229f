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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "maskopt/tensor.hpp"

namespace maskopt::io {

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

// Unsigned-byte IDX container: big-endian magic, big-endian u32 dimension
// sizes, then the row-major payload.
struct IdxArray {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> values;
};

// Accepts only 1-D label files (0x801) and 3-D image files (0x803).
// Throws FormatError naming the byte offset of the problem.
IdxArray parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_idx(const IdxArray& array);

// Images of a 0x803 container as [1, H, W] tensors holding 0..255.
std::vector<Tensor> idx_images(const IdxArray& array);
std::vector<std::size_t> idx_labels(const IdxArray& array);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace maskopt::io
