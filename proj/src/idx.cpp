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

#include "maskopt/io/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

namespace maskopt::io {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) {
    throw FormatError("idx: truncated header at byte offset " + std::to_string(offset) +
                      ": expected 4 bytes, got " +
                      std::to_string(bytes.size() > offset ? bytes.size() - offset : 0));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  std::size_t rank = 0;
  if (magic == kIdxLabelMagic) {
    rank = 1;
  } else if (magic == kIdxImageMagic) {
    rank = 3;
  } else {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw FormatError(std::string("idx: unsupported magic ") + buf +
                      " at byte offset 0 (expected 0x00000801 or 0x00000803)");
  }
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * d));
    count *= out.dims.back();
  }
  const std::size_t offset = 4 + 4 * rank;
  const std::size_t available = bytes.size() - offset;
  if (available < count) {
    throw FormatError("idx: truncated payload at byte offset " + std::to_string(offset) +
                      ": expected " + std::to_string(count) + " bytes, got " +
                      std::to_string(available));
  }
  if (available > count) {
    throw FormatError("idx: " + std::to_string(available - count) +
                      " trailing bytes at byte offset " + std::to_string(offset + count));
  }
  out.values.assign(bytes.begin() + offset, bytes.end());
  return out;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  if (array.dims.size() != 1 && array.dims.size() != 3)
    throw ArgumentError("encode_idx: only 1-D and 3-D arrays are supported");
  std::vector<std::uint8_t> out;
  put_be32(out, array.dims.size() == 1 ? kIdxLabelMagic : kIdxImageMagic);
  for (std::size_t d : array.dims) put_be32(out, static_cast<std::uint32_t>(d));
  out.insert(out.end(), array.values.begin(), array.values.end());
  return out;
}

std::vector<Tensor> idx_images(const IdxArray& array) {
  if (array.dims.size() != 3) throw FormatError("idx: expected an image (3-D) container");
  const std::size_t n = array.dims[0], h = array.dims[1], w = array.dims[2];
  std::vector<Tensor> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor img({1, h, w});
    for (std::size_t j = 0; j < h * w; ++j) img[j] = array.values[i * h * w + j];
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<std::size_t> idx_labels(const IdxArray& array) {
  if (array.dims.size() != 1) throw FormatError("idx: expected a label (1-D) container");
  return {array.values.begin(), array.values.end()};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace maskopt::io
