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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/network.hpp"

namespace maskopt::io {

// FGV1 model container, all integers little-endian u32, reals IEEE f32:
//
//   "FGV1"
//   input rank, dims...
//   clip policy
//   normalization channel count C, mean[C], stddev[C]
//   layer count
//   per layer: u8 kind tag, u32 header count, u32 header..., f32 payload
//     conv2d  header {in, out, kernel, stride, padding}, payload weight, bias
//     maxpool header {window, stride}
//     linear  header {in, out}, payload weight, bias
//     relu / flatten / softmax: empty header, no payload
//   u32 CRC-32 (zlib polynomial) of every byte between magic and checksum
struct ModelBundle {
  Network network;
  Normalization normalization;
};

std::vector<std::uint8_t> encode_model(const Network& net, const Normalization& norm);
ModelBundle decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Network& net,
                const Normalization& norm);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace maskopt::io
