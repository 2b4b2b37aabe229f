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

#include "maskopt/io/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace maskopt::io {

std::uint8_t quantize_unit(float v) {
  const double clipped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clipped * 255.0 + 0.5));
}

namespace {

std::vector<std::uint8_t> header(const char* magic, std::size_t w, std::size_t h) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " +
                        std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1u << 24) throw FormatError("netpbm: header value too large");
      ++pos_;
    }
    if (pos_ == start)
      throw FormatError("netpbm: expected a number at byte offset " + std::to_string(start));
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError("netpbm: missing whitespace before raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

std::vector<std::uint8_t> encode_pgm(const Tensor& img) {
  if (img.rank() != 3 || img.dim(0) != 1) throw ShapeError("encode_pgm: expected [1, H, W]");
  auto out = header("P5", img.dim(2), img.dim(1));
  for (float v : img.values()) out.push_back(quantize_unit(v));
  return out;
}

std::vector<std::uint8_t> encode_ppm(const Tensor& img) {
  if (img.rank() != 3 || img.dim(0) != 3) throw ShapeError("encode_ppm: expected [3, H, W]");
  const std::size_t h = img.dim(1), w = img.dim(2);
  auto out = header("P6", w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 3; c-- > 0;) out.push_back(quantize_unit(img.at(c, y, x)));
  return out;
}

std::vector<std::uint8_t> encode_netpbm(const Tensor& img) {
  if (img.rank() == 3 && img.dim(0) == 1) return encode_pgm(img);
  if (img.rank() == 3 && img.dim(0) == 3) return encode_ppm(img);
  throw ShapeError("netpbm: expected 1 or 3 channels, got " + shape_string(img.shape()));
}

Tensor decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("netpbm: expected P5 or P6 magic at byte offset 0");
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes);
  const std::size_t w = reader.number();
  const std::size_t h = reader.number();
  const std::size_t maxval = reader.number();
  if (maxval != 255) throw FormatError("netpbm: only maxval 255 is supported");
  if (w == 0 || h == 0) throw FormatError("netpbm: zero image dimension");
  const std::size_t start = reader.raster_start();
  const std::size_t need = w * h * channels;
  if (bytes.size() < start || bytes.size() - start != need)
    throw FormatError("netpbm: raster at byte offset " + std::to_string(start) + " expected " +
                      std::to_string(need) + " bytes, got " +
                      std::to_string(bytes.size() >= start ? bytes.size() - start : 0));
  Tensor img({channels, h, w});
  std::size_t p = start;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = channels; c-- > 0;) img.at(c, y, x) = bytes[p++] / 255.0f;
  return img;
}

}  // namespace maskopt::io
