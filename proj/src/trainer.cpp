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

#include "maskopt/trainer.hpp"

#include <cmath>
#include <numeric>
#include <variant>

#include "maskopt/parallel.hpp"

namespace maskopt {

namespace {

template <typename Fn>
void for_each_param(Network& net, Fn&& fn) {
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    std::visit(
        [&](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<float>> || std::is_same_v<L, Linear<float>>)
            fn(i, l.weight, l.bias);
        },
        net.layer(i));
  }
}

}  // namespace

void init_parameters(Network& net, Rng& rng) {
  for_each_param(net, [&](std::size_t, Tensor& weight, Tensor& bias) {
    const std::size_t fan_in = weight.size() / weight.dim(0);
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (auto& v : weight.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    bias.fill(0.0f);
  });
}

double evaluate(const Network& net, const Dataset& split, std::size_t jobs) {
  if (split.empty()) throw ArgumentError("evaluate: empty split");
  std::vector<char> correct(split.size(), 0);
  parallel_for(split.size(), jobs, [&](std::size_t i) {
    correct[i] = forward(net, split.images[i]).predicted() == split.labels[i];
  });
  const auto hits = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
  return static_cast<double>(hits) / static_cast<double>(split.size());
}

TrainResult train(const Dataset& train_split, const Dataset& test_split, Network architecture,
                  const TrainConfig& cfg, std::size_t jobs) {
  if (train_split.empty()) throw ArgumentError("train: empty training split");
  if (cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || cfg.momentum < 0.0)
    throw ArgumentError("train: batch size and learning rate must be positive");

  Rng rng(cfg.seed);
  TrainResult result;
  result.network = std::move(architecture);
  Network& net = result.network;
  init_parameters(net, rng);

  auto grads = ParamGrads<float>::zeros_like(net);
  auto velocity = ParamGrads<float>::zeros_like(net);
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grads.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const auto tape = forward(net, train_split.images[idx]);
        const std::size_t label = train_split.labels[idx];
        loss_sum += -std::log(std::max(static_cast<double>(tape.scores()[label]), 1e-30));
        Tensor grad_logits = tape.scores();
        grad_logits[label] -= 1.0f;
        backward_from_logits(net, tape, grad_logits, nullptr, &grads, false);
      }
      const float scale = 1.0f / static_cast<float>(end - start);
      const float lr = static_cast<float>(cfg.learning_rate);
      const float mu = static_cast<float>(cfg.momentum);
      for_each_param(net, [&](std::size_t i, Tensor& weight, Tensor& bias) {
        auto step = [&](Tensor& param, Tensor& vel, const Tensor& g) {
          for (std::size_t j = 0; j < param.size(); ++j) {
            vel[j] = mu * vel[j] - lr * scale * g[j];
            param[j] += vel[j];
          }
        };
        step(weight, velocity.weight[i], grads.weight[i]);
        if (cfg.hidden_bias || i + 2 == net.num_layers())
          step(bias, velocity.bias[i], grads.bias[i]);
      });
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.mean_loss = loss_sum / static_cast<double>(order.size());
    entry.test_accuracy = test_split.empty() ? 0.0 : evaluate(net, test_split, jobs);
    result.log.push_back(entry);
  }
  result.accuracy = test_split.empty() ? 0.0 : evaluate(net, test_split, jobs);
  result.below_target = result.accuracy < cfg.target_accuracy;
  return result;
}

}  // namespace maskopt
