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
#include <span>
#include <vector>

#include "maskopt/tensor.hpp"

namespace maskopt::io {

// Byte value for v in [0, 1]: round-half-up of v * 255 after clipping.
std::uint8_t quantize_unit(float v);

// Binary P5 for [1, H, W]. Header "P5\n{W} {H}\n255\n".
std::vector<std::uint8_t> encode_pgm(const Tensor& img);

// Binary P6 for [3, H, W]. Tensor channels are in BGR order; the file is RGB.
std::vector<std::uint8_t> encode_ppm(const Tensor& img);

// Picks P5 or P6 by channel count.
std::vector<std::uint8_t> encode_netpbm(const Tensor& img);

// P5 -> [1, H, W], P6 -> [3, H, W] (BGR), values byte / 255. Header comments
// are accepted; maxval must be 255.
Tensor decode_netpbm(std::span<const std::uint8_t> bytes);

}  // namespace maskopt::io
