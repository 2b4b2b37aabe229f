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

#include "maskopt/trainer.hpp"
#include "test_util.hpp"

using namespace maskopt;

namespace {

// Two separable classes: bright top half or bright bottom half.
Dataset halves(std::size_t n, Rng& rng) {
  Dataset d;
  d.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    Tensor x({1, 8, 8});
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t c = 0; c < 8; ++c)
        x.at(0, y, c) = static_cast<float>(((y < 4) == (label == 0) ? 1.0 : 0.0) + 0.1 * rng.normal());
    d.images.push_back(x);
    d.labels.push_back(label);
  }
  return d;
}

Network arch() {
  return NetworkBuilder<float>({1, 8, 8}).conv(2, 3, 1, 1).relu().flatten().linear(2).softmax().build();
}

}  // namespace

TEST_CASE("training is deterministic and learns a separable task") {
  Rng rng(41);
  const Dataset tr = halves(64, rng), te = halves(32, rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  const TrainResult a = train(tr, te, arch(), cfg);
  const TrainResult b = train(tr, te, arch(), cfg, 2);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.log.size() == 3);
  CHECK(a.log[0].mean_loss == b.log[0].mean_loss);
  CHECK(a.accuracy >= 0.95);
  CHECK_FALSE(a.below_target);
  CHECK(evaluate(a.network, te) == a.accuracy);
}

TEST_CASE("zero epochs leave an untrained network") {
  Rng rng(42);
  const Dataset tr = halves(16, rng), te = halves(16, rng);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(tr, te, arch(), cfg);
  CHECK(r.log.empty());
  CHECK(r.accuracy == evaluate(r.network, te));
}

TEST_CASE("evaluate counts argmax hits") {
  auto net = NetworkBuilder<float>({1, 1, 1}).flatten().linear(2).softmax().build();
  auto& lin = std::get<Linear<float>>(net.layer(1));
  lin.weight[0] = 1.0f;
  lin.weight[1] = -1.0f;
  Dataset d;
  d.num_classes = 2;
  d.images = {Tensor({1, 1, 1}, 1.0f), Tensor({1, 1, 1}, -1.0f), Tensor({1, 1, 1}, 2.0f)};
  d.labels = {0, 1, 1};
  CHECK(evaluate(net, d) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("hidden biases stay at zero when disabled") {
  Rng rng(43);
  const Dataset tr = halves(32, rng), te = halves(8, rng);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.hidden_bias = false;
  const TrainResult r = train(tr, te, arch(), cfg);
  CHECK(reduce(std::get<Conv2d<float>>(r.network.layers()[0]).bias, Reduction::max_abs) == 0.0f);
}
