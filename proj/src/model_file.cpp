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

#include "maskopt/io/model_file.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <string>
#include <variant>

#include "maskopt/io/idx.hpp"

namespace maskopt::io {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'V', '1'};
// Sanity cap on any single dimension read from a file.
constexpr std::uint32_t kMaxExtent = 1u << 24;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void tensor(const Tensor& t) {
    for (float v : t.values()) f32(v);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t offset) : bytes_(bytes), pos_(offset) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint32_t extent() {
    const std::uint32_t v = u32();
    if (v > kMaxExtent) throw FormatError("model: implausible extent " + std::to_string(v));
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  Tensor tensor(Shape shape) {
    const std::size_t n = shape_size(shape);
    need(4 * n);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < n; ++i) t[i] = f32();
    return t;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw FormatError("model: truncated at byte offset " + std::to_string(pos_));
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Network& net, const Normalization& norm) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(static_cast<std::uint32_t>(net.input_shape().size()));
  for (std::size_t d : net.input_shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(net.clip_policy()));
  w.u32(static_cast<std::uint32_t>(norm.channels()));
  for (float m : norm.mean) w.f32(m);
  for (float s : norm.stddev) w.f32(s);
  w.u32(static_cast<std::uint32_t>(net.num_layers()));
  for (const auto& layer : net.layers()) {
    w.u8(static_cast<std::uint8_t>(layer_kind(layer)));
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<float>>) {
            w.u32(5);
            for (std::size_t v : {l.in_channels, l.out_channels, l.kernel, l.stride, l.padding})
              w.u32(static_cast<std::uint32_t>(v));
            w.tensor(l.weight);
            w.tensor(l.bias);
          } else if constexpr (std::is_same_v<L, MaxPool>) {
            w.u32(2);
            w.u32(static_cast<std::uint32_t>(l.window));
            w.u32(static_cast<std::uint32_t>(l.stride));
          } else if constexpr (std::is_same_v<L, Linear<float>>) {
            w.u32(2);
            w.u32(static_cast<std::uint32_t>(l.in_features));
            w.u32(static_cast<std::uint32_t>(l.out_features));
            w.tensor(l.weight);
            w.tensor(l.bias);
          } else {
            w.u32(0);
          }
        },
        layer);
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(std::span(bytes).subspan(sizeof kMagic));
  w.u32(crc);
  return std::move(bytes);
}

ModelBundle decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    std::string got;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, bytes.size()); ++i)
      got += std::isprint(bytes[i]) ? static_cast<char>(bytes[i]) : '?';
    throw VersionError("model: unsupported magic/version '" + got + "' (expected FGV1)");
  }
  if (bytes.size() < 8) throw FormatError("model: truncated at byte offset 4");
  const auto body = bytes.subspan(4, bytes.size() - 8);
  Reader tail(bytes, bytes.size() - 4);
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32_of(body);
  if (stored != actual) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "stored 0x%08x, computed 0x%08x", stored, actual);
    throw ChecksumError(std::string("model: checksum mismatch (") + buf + ")");
  }

  Reader r(bytes.first(bytes.size() - 4), 4);
  Shape input;
  const std::uint32_t rank = r.extent();
  if (rank == 0 || rank > 4) throw FormatError("model: bad input rank");
  for (std::uint32_t i = 0; i < rank; ++i) input.push_back(r.extent());
  const std::uint32_t policy = r.u32();
  if (policy > 1) throw FormatError("model: unknown clip policy " + std::to_string(policy));

  ModelBundle bundle;
  const std::uint32_t channels = r.extent();
  for (std::uint32_t c = 0; c < channels; ++c) bundle.normalization.mean.push_back(r.f32());
  for (std::uint32_t c = 0; c < channels; ++c) bundle.normalization.stddev.push_back(r.f32());

  const std::uint32_t count = r.extent();
  std::vector<Layer<float>> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.position();
    const std::uint8_t tag = r.u8();
    const std::uint32_t nheader = r.u32();
    if (nheader > 8) throw FormatError("model: oversized layer header at byte offset " + std::to_string(at));
    std::vector<std::uint32_t> h;
    for (std::uint32_t k = 0; k < nheader; ++k) h.push_back(r.extent());
    auto expect = [&](std::uint32_t n) {
      if (nheader != n)
        throw FormatError("model: layer at byte offset " + std::to_string(at) +
                          " has " + std::to_string(nheader) + " header fields, expected " +
                          std::to_string(n));
    };
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::conv2d: {
        expect(5);
        Conv2d<float> c{h[0], h[1], h[2], h[3], h[4], {}, {}};
        c.weight = r.tensor({c.out_channels, c.in_channels, c.kernel, c.kernel});
        c.bias = r.tensor({c.out_channels});
        layers.push_back(std::move(c));
        break;
      }
      case LayerKind::relu:
        expect(0);
        layers.push_back(Relu{});
        break;
      case LayerKind::maxpool:
        expect(2);
        layers.push_back(MaxPool{h[0], h[1]});
        break;
      case LayerKind::flatten:
        expect(0);
        layers.push_back(Flatten{});
        break;
      case LayerKind::linear: {
        expect(2);
        Linear<float> l{h[0], h[1], {}, {}};
        l.weight = r.tensor({l.out_features, l.in_features});
        l.bias = r.tensor({l.out_features});
        layers.push_back(std::move(l));
        break;
      }
      case LayerKind::softmax:
        expect(0);
        layers.push_back(Softmax{});
        break;
      default:
        throw FormatError("model: unknown layer tag " + std::to_string(tag) +
                          " at byte offset " + std::to_string(at));
    }
  }
  if (r.position() != bytes.size() - 4)
    throw FormatError("model: trailing bytes at offset " + std::to_string(r.position()));
  bundle.network = Network(std::move(input), std::move(layers), static_cast<ClipPolicy>(policy));
  if (bundle.normalization.channels() != bundle.network.input_shape()[0])
    throw FormatError("model: normalization channel count does not match input");
  return bundle;
}

void save_model(const std::filesystem::path& path, const Network& net, const Normalization& norm) {
  write_file(path, encode_model(net, norm));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return decode_model(read_file(path));
}

}  // namespace maskopt::io
