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

#include <cmath>
#include <numeric>
#include <set>

#include "maskopt/image_ops.hpp"
#include "maskopt/rng.hpp"
#include "maskopt/tensor.hpp"

using namespace maskopt;

TEST_CASE("tensor construction and shape checks") {
  Tensor t({2, 3, 4}, 1.5f);
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  CHECK(t.at(1, 2, 3) == 1.5f);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  CHECK(t.reshaped({24}).shape() == Shape{24});
  CHECK(shape_string({3, 28, 28}) == "[3x28x28]");

  // at() is row-major over [C, H, W].
  Tensor u({2, 2, 3});
  std::iota(u.values().begin(), u.values().end(), 0.0f);
  CHECK(u.at(1, 0, 2) == 8.0f);
}

TEST_CASE("map_zip rejects mismatched shapes") {
  Tensor a({2, 2}), b({4});
  CHECK_THROWS_AS(map_zip(a, b, [](float x, float y) { return x + y; }), ShapeError);
}

TEST_CASE("map_zip with multiply by ones is the identity") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    Tensor a({2, 5, 3});
    for (auto& v : a.values()) v = static_cast<float>(rng.normal() * 100.0);
    CHECK(map_zip(a, Tensor::ones(a.shape()), [](float x, float y) { return x * y; }) == a);
  }
}

TEST_CASE("reductions") {
  Tensor t({4}, std::vector<float>{1.0f, -3.0f, 2.0f, 0.5f});
  CHECK(reduce(t, Reduction::sum) == doctest::Approx(0.5));
  CHECK(reduce(t, Reduction::max_abs) == 3.0f);
  CHECK(reduce(t, Reduction::max) == 2.0f);
  CHECK(reduce(t, Reduction::min) == -3.0f);
  CHECK_THROWS_AS(reduce(Tensor(), Reduction::sum), ArgumentError);
}

TEST_CASE("clamp01 and all_finite") {
  Tensor t({3}, std::vector<float>{-1.0f, 0.25f, 7.0f});
  CHECK(clamp01(t) == Tensor({3}, std::vector<float>{0.0f, 0.25f, 1.0f}));
  CHECK(all_finite(t));
  Rng rng(5);
  Tensor r({100});
  for (auto& v : r.values()) v = static_cast<float>(3.0 * rng.normal());
  CHECK(clamp01(clamp01(r)) == clamp01(r));
  t[1] = std::nanf("");
  CHECK_FALSE(all_finite(t));
}

TEST_CASE("float/double cast round trip") {
  Tensor t({3}, std::vector<float>{0.1f, -2.5f, 1e-7f});
  CHECK(t.cast<double>().cast<float>() == t);
}

TEST_CASE("rng is deterministic and splits into distinct streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  CHECK(c.split(0).next_u64() != c.split(1).next_u64());
  CHECK(Rng(1).split(3).seed() == Rng(1).split(3).seed());
}

TEST_CASE("rng distributions") {
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));

  sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
  std::vector<int> sorted(50);
  std::iota(sorted.begin(), sorted.end(), 0);
  CHECK(v != sorted);
}

TEST_CASE("gaussian taps are normalized") {
  for (double sigma : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const auto taps = gaussian_taps(sigma);
    CHECK(taps.size() == 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
    // The 2-D kernel is the outer product, so its sum is the square.
    const double s = std::accumulate(taps.begin(), taps.end(), 0.0);
    CHECK(std::abs(s * s - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(gaussian_taps(0.0), ArgumentError);
}

TEST_CASE("blur of a single white pixel gives the kernel centre weight") {
  const double sigma = 1.0;
  TensorD img({1, 21, 21});
  img.at(0, 10, 10) = 1.0;
  const TensorD out = gaussian_blur(img, sigma);

  // Independent 2-D evaluation of the normalized kernel.
  const int r = 3;
  double total = 0.0;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) total += std::exp(-(x * x + y * y) / (2 * sigma * sigma));
  CHECK(out.at(0, 10, 10) == doctest::Approx(1.0 / total).epsilon(1e-12));
  CHECK(out.at(0, 10, 11) ==
        doctest::Approx(std::exp(-1.0 / (2 * sigma * sigma)) / total).epsilon(1e-12));
}

TEST_CASE("blur preserves shape and constant images") {
  Tensor img({3, 5, 7}, 0.3f);
  const Tensor out = gaussian_blur(img, 2.0);
  CHECK(out.shape() == img.shape());
  for (float v : out.values()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));
}

TEST_CASE("uniform noise stays in [lo, hi)") {
  Rng rng(11);
  const Tensor t = uniform_noise<float>({10000}, 0.99, 1.0, rng);
  for (float v : t.values()) {
    REQUIRE(v >= 0.99f);
    REQUIRE(v < 1.0f);
  }
  CHECK_THROWS_AS(uniform_noise<float>({1}, 1.0, 1.0, rng), ArgumentError);

  const double lo = -2.0, hi = 3.0, n = 1e5;
  const TensorD u = uniform_noise<double>({100000}, lo, hi, rng);
  const double mean = reduce(u, Reduction::sum) / n;
  CHECK(std::abs(mean - (lo + hi) / 2) <= 3 * (hi - lo) / std::sqrt(12 * n));
}
