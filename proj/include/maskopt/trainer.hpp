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
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/network.hpp"
#include "maskopt/rng.hpp"

namespace maskopt {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  double target_accuracy = 0.95;
  // When false, biases of every layer before the classifier stay at zero.
  bool hidden_bias = true;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrainResult {
  Network network;
  double accuracy = 0.0;
  bool below_target = false;
  std::vector<EpochLog> log;
};

// Uniform fan-in initialization, U(-sqrt(3 / fan_in), sqrt(3 / fan_in)) for
// weights, zero biases.
void init_parameters(Network& net, Rng& rng);

// Minibatch SGD with momentum on the mean cross-entropy of each batch. The
// architecture's parameters are re-initialized from cfg.seed. Single-threaded
// and deterministic; `jobs` only parallelizes the held-out evaluation.
TrainResult train(const Dataset& train_split, const Dataset& test_split, Network architecture,
                  const TrainConfig& cfg, std::size_t jobs = 1);

// Fraction of argmax-correct predictions.
double evaluate(const Network& net, const Dataset& split, std::size_t jobs = 1);

}  // namespace maskopt
