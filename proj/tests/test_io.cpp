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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "maskopt/dataset.hpp"
#include "maskopt/error.hpp"
#include "maskopt/io/idx.hpp"
#include "maskopt/io/model_file.hpp"
#include "maskopt/io/netpbm.hpp"
#include "maskopt/io/run_config.hpp"
#include "test_util.hpp"

using namespace maskopt;
using namespace maskopt::io;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("idx image file example") {
  const std::vector<std::uint8_t> bytes = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3,
                                           0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255};
  const IdxArray a = parse_idx(bytes);
  CHECK(a.dims == std::vector<std::size_t>{2, 2, 3});
  const auto imgs = idx_images(a);
  REQUIRE(imgs.size() == 2);
  CHECK(imgs[0].shape() == Shape{1, 2, 3});
  CHECK(imgs[1].at(0, 1, 2) == 255.0f);
  CHECK(imgs[0].at(0, 1, 0) == 3.0f);
  CHECK(encode_idx(a) == bytes);
}

TEST_CASE("idx label file example") {
  const std::vector<std::uint8_t> bytes = {0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9};
  CHECK(idx_labels(parse_idx(bytes)) == std::vector<std::size_t>{7, 0, 9});
  CHECK_THROWS_AS(idx_images(parse_idx(bytes)), FormatError);
}

TEST_CASE("idx rejects bad magic and truncation") {
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0, 8, 2, 0, 0, 0, 1, 5}), FormatError);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{1, 0, 8, 1, 0, 0, 0, 1, 5}), FormatError);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 0, 2, 5}), FormatError);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 0, 1, 5, 6}), FormatError);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0, 8}), FormatError);
}

TEST_CASE("idx parser only throws FormatError on arbitrary input") {
  Rng rng(21);
  const std::vector<std::uint8_t> good = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2,
                                          0, 0, 0, 2, 1, 2, 3, 4};
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::uint8_t> b = good;
    const auto edits = 1 + rng.below(4);
    for (std::size_t k = 0; k < edits; ++k) b[rng.below(b.size())] = static_cast<std::uint8_t>(rng.below(256));
    b.resize(rng.below(b.size() + 1));
    try {
      const IdxArray a = parse_idx(b);
      std::size_t n = 1;
      for (auto d : a.dims) n *= d;
      CHECK(n == a.values.size());
    } catch (const FormatError&) {
    }
  }
}

TEST_CASE("quantization rounds half up and clips") {
  CHECK(quantize_unit(0.0f) == 0);
  CHECK(quantize_unit(1.0f) == 255);
  CHECK(quantize_unit(-0.5f) == 0);
  CHECK(quantize_unit(2.0f) == 255);
  CHECK(quantize_unit(0.5f) == 128);  // 127.5 rounds up
  CHECK(quantize_unit(1.0f / 255.0f) == 1);
}

TEST_CASE("pgm example") {
  const Tensor img({1, 1, 2}, std::vector<float>{0.0f, 1.0f});
  const auto b = encode_pgm(img);
  const std::string expect = std::string("P5\n2 1\n255\n") + '\x00' + '\xff';
  CHECK(b == bytes_of(expect));
  CHECK(decode_netpbm(b) == img);
}

TEST_CASE("ppm writes RGB from BGR channels") {
  Tensor img({3, 1, 1});
  img[0] = 1.0f;  // blue
  const auto b = encode_ppm(img);
  const std::string expect = std::string("P6\n1 1\n255\n") + '\x00' + '\x00' + '\xff';
  CHECK(b == bytes_of(expect));
  CHECK(decode_netpbm(b) == img);
  CHECK(encode_netpbm(img) == b);
  CHECK_THROWS_AS(encode_pgm(img), ShapeError);
}

TEST_CASE("netpbm round trip of byte-valued images") {
  Rng rng(22);
  Tensor img({3, 4, 5});
  for (auto& v : img.values()) v = static_cast<float>(rng.below(256)) / 255.0f;
  CHECK(decode_netpbm(encode_netpbm(img)) == img);
}

TEST_CASE("netpbm header comments and errors") {
  const std::string with_comment = std::string("P5\n# made by hand\n1 1\n255\n") + '\x80';
  CHECK(decode_netpbm(bytes_of(with_comment))[0] == doctest::Approx(128.0f / 255.0f));
  CHECK_THROWS_AS(decode_netpbm(bytes_of("P5\n1 1\n65535\n\x01\x02")), FormatError);
  CHECK_THROWS_AS(decode_netpbm(bytes_of("P5\n2 2\n255\n\x01")), FormatError);
  CHECK_THROWS_AS(decode_netpbm(bytes_of("P2\n1 1\n255\n1")), FormatError);
}

TEST_CASE("model file round trip") {
  Rng rng(23);
  const auto net = testing::small_network<float>(rng, 3, 5);
  const Normalization norm{{0.1f, 0.2f, 0.3f}, {0.5f, 0.6f, 0.7f}};
  const auto bytes = encode_model(net, norm);
  CHECK(std::memcmp(bytes.data(), "FGV1", 4) == 0);
  const ModelBundle back = decode_model(bytes);
  CHECK(back.normalization == norm);
  CHECK(encode_model(back.network, back.normalization) == bytes);

  const Tensor x = testing::random_tensor<float>({3, 8, 8}, rng);
  CHECK(forward(back.network, x).scores() == forward(net, x).scores());

  const auto path = std::filesystem::temp_directory_path() / "maskopt_test_model.fgv1";
  save_model(path, net, norm);
  CHECK(encode_model(load_model(path).network, norm) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("model file corruption is detected") {
  Rng rng(24);
  const auto net = testing::small_network<float>(rng);
  const auto bytes = encode_model(net, Normalization::identity(1));
  for (std::size_t i = 4; i < bytes.size(); i += 7) {
    auto bad = bytes;
    bad[i] ^= 0x5a;
    CHECK_THROWS_AS(decode_model(bad), FormatError);
  }
  auto payload = bytes;
  payload[bytes.size() / 2] ^= 1;
  CHECK_THROWS_AS(decode_model(payload), ChecksumError);
  auto magic = bytes;
  magic[3] = '2';
  CHECK_THROWS_AS(decode_model(magic), VersionError);
  CHECK_THROWS_AS(decode_model(std::span(bytes).first(bytes.size() - 1)), FormatError);
}

TEST_CASE("run config round trip") {
  GameConfig cfg;
  cfg.game = GameKind::repression;
  cfg.target_class = 3;
  cfg.lambda = 0.1 + 0.2;
  cfg.learning_rate = 0.3;
  cfg.iterations = 17;
  cfg.seed = 123456789012345ULL;
  cfg.similarity = Similarity::cross_entropy;
  cfg.reference = {Reference::Kind::blurred, 10.0};
  cfg.defended = false;
  CHECK(parse_run_config(format_run_config(cfg)) == cfg);
  CHECK(parse_run_config(format_run_config(GameConfig{})) == GameConfig{});
  CHECK(format_real(0.1) == "0.1");
}

TEST_CASE("run config parsing") {
  const GameConfig cfg = parse_run_config("# comment\n\n  game = generation \nlambda=1e-5\n");
  CHECK(cfg.game == GameKind::generation);
  CHECK(cfg.lambda == 1e-5);
  CHECK_FALSE(cfg.target_class.has_value());
  CHECK_THROWS_AS(parse_run_config("colour=red\n"), FormatError);
  CHECK_THROWS_AS(parse_run_config("lambda=1\nlambda=2\n"), FormatError);
  CHECK_THROWS_AS(parse_run_config("lambda\n"), FormatError);
  CHECK_THROWS_AS(parse_run_config("iterations=-1\n"), FormatError);
  CHECK_THROWS_AS(parse_run_config("defended=maybe\n"), FormatError);
}

TEST_CASE("normalization round trip and black image") {
  Rng rng(25);
  const Normalization norm{{0.1f, 0.5f, 0.9f}, {0.2f, 0.3f, 0.25f}};
  Tensor x({3, 4, 4});
  for (auto& v : x.values()) v = static_cast<float>(rng.uniform01());
  const Tensor back = norm.denormalize(norm.normalize(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) <= 1e-6f);
  const Tensor black = norm.black({3, 1, 1});
  CHECK(black[0] == doctest::Approx(-0.1f / 0.2f));
  CHECK(norm.normalize(Tensor({3, 1, 1})) == black);
  CHECK_THROWS_AS(norm.normalize(Tensor({1, 4, 4})), ShapeError);
}

TEST_CASE("normalization fit gives zero-mean data") {
  Rng rng(26);
  std::vector<Tensor> imgs;
  for (int i = 0; i < 10; ++i) {
    Tensor x({1, 3, 3});
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform01());
    imgs.push_back(x);
  }
  const Normalization norm = Normalization::fit(imgs);
  double s = 0.0;
  for (const auto& x : imgs) s += reduce(norm.normalize(x), Reduction::sum);
  CHECK(std::abs(s / 90.0) < 1e-5);
}
