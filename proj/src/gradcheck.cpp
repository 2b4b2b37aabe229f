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

#include "maskopt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

namespace maskopt {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

namespace {

// ReLU sign pattern plus max-pool selections; two points with equal
// signatures lie in the same linear piece of the network.
std::vector<std::uint32_t> piece_signature(const NetworkD& net, const ForwardTape<double>& tape) {
  std::vector<std::uint32_t> sig;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const auto kind = layer_kind(net.layers()[i]);
    if (kind == LayerKind::relu) {
      const auto& in = i == 0 ? tape.input : tape.outputs[i - 1];
      for (double v : in.values()) sig.push_back(v > 0.0 ? 1u : 0u);
    } else if (kind == LayerKind::maxpool) {
      sig.insert(sig.end(), tape.pool_argmax[i].begin(), tape.pool_argmax[i].end());
    }
  }
  return sig;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t samples, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= samples) return idx;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(samples);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double cross_entropy(const TensorD& scores, std::size_t label) {
  return -std::log(scores[label]);
}

}  // namespace

GradientCheckReport gradient_check(const NetworkD& net, const TensorD& input, double eps,
                                   Rng& rng, std::size_t samples,
                                   std::optional<std::size_t> class_index) {
  if (!(eps > 0.0)) throw ArgumentError("gradient_check: eps must be > 0");
  const auto tape = forward(net, input);
  const std::size_t cls = class_index.value_or(tape.predicted());
  TensorD seed(tape.scores().shape());
  seed[cls] = 1.0;
  const TensorD analytic = backward_to_input(net, tape, seed);
  const auto base_sig = piece_signature(net, tape);

  GradientCheckReport report;
  for (std::size_t i : sample_indices(input.size(), samples, rng)) {
    TensorD plus = input, minus = input;
    plus[i] += eps;
    minus[i] -= eps;
    const auto tp = forward(net, plus);
    const auto tm = forward(net, minus);
    if (piece_signature(net, tp) != base_sig || piece_signature(net, tm) != base_sig) {
      ++report.excluded;
      continue;
    }
    const double numeric = (tp.scores()[cls] - tm.scores()[cls]) / (2.0 * eps);
    report.max_relative_error =
        std::max(report.max_relative_error, relative_error(analytic[i], numeric));
    ++report.checked;
  }
  return report;
}

GradientCheckReport param_gradient_check(const NetworkD& net, const TensorD& input,
                                         std::size_t label, std::size_t layer, double eps,
                                         Rng& rng, std::size_t samples) {
  if (!(eps > 0.0)) throw ArgumentError("param_gradient_check: eps must be > 0");
  const auto kind = layer_kind(net.layers().at(layer));
  if (kind != LayerKind::conv2d && kind != LayerKind::linear)
    throw ArgumentError("param_gradient_check: layer has no parameters");

  const auto tape = forward(net, input);
  TensorD grad_logits = tape.scores();
  grad_logits[label] -= 1.0;
  auto grads = ParamGrads<double>::zeros_like(net);
  backward_from_logits(net, tape, grad_logits, nullptr, &grads, false);
  const auto base_sig = piece_signature(net, tape);

  auto weight_of = [layer](NetworkD& n) -> TensorD& {
    return std::visit(
        [](auto& l) -> TensorD& {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<double>> || std::is_same_v<L, Linear<double>>)
            return l.weight;
          else
            throw ArgumentError("param_gradient_check: layer has no parameters");
        },
        n.layer(layer));
  };

  GradientCheckReport report;
  NetworkD probe = net;
  TensorD& w = weight_of(probe);
  for (std::size_t i : sample_indices(w.size(), samples, rng)) {
    const double orig = w[i];
    w[i] = orig + eps;
    const auto tp = forward(probe, input);
    w[i] = orig - eps;
    const auto tm = forward(probe, input);
    w[i] = orig;
    if (piece_signature(probe, tp) != base_sig || piece_signature(probe, tm) != base_sig) {
      ++report.excluded;
      continue;
    }
    const double numeric =
        (cross_entropy(tp.scores(), label) - cross_entropy(tm.scores(), label)) / (2.0 * eps);
    report.max_relative_error =
        std::max(report.max_relative_error, relative_error(grads.weight[layer][i], numeric));
    ++report.checked;
  }
  return report;
}

}  // namespace maskopt
