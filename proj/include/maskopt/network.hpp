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
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "maskopt/tensor.hpp"

namespace maskopt {

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

enum class LayerKind : std::uint8_t {
  conv2d = 1,
  relu = 2,
  maxpool = 3,
  flatten = 4,
  linear = 5,
  softmax = 6,
};

// weight: [out, in, k, k], bias: [out]. Square kernels, zero padding.
template <typename Real>
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  BasicTensor<Real> weight;
  BasicTensor<Real> bias;

  bool operator==(const Conv2d&) const = default;
};

struct Relu {
  bool operator==(const Relu&) const = default;
};

// No padding; out = (in - window) / stride + 1.
struct MaxPool {
  std::size_t window = 2;
  std::size_t stride = 2;

  bool operator==(const MaxPool&) const = default;
};

struct Flatten {
  bool operator==(const Flatten&) const = default;
};

// weight: [out, in], bias: [out].
template <typename Real>
struct Linear {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  BasicTensor<Real> weight;
  BasicTensor<Real> bias;

  bool operator==(const Linear&) const = default;
};

struct Softmax {
  bool operator==(const Softmax&) const = default;
};

template <typename Real>
using Layer = std::variant<Conv2d<Real>, Relu, MaxPool, Flatten, Linear<Real>, Softmax>;

template <typename Real>
LayerKind layer_kind(const Layer<Real>& layer) {
  return std::visit(
      [](const auto& l) -> LayerKind {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Conv2d<Real>>) return LayerKind::conv2d;
        else if constexpr (std::is_same_v<L, Relu>) return LayerKind::relu;
        else if constexpr (std::is_same_v<L, MaxPool>) return LayerKind::maxpool;
        else if constexpr (std::is_same_v<L, Flatten>) return LayerKind::flatten;
        else if constexpr (std::is_same_v<L, Linear<Real>>) return LayerKind::linear;
        else return LayerKind::softmax;
      },
      layer);
}

const char* layer_kind_name(LayerKind kind);

// Which nonlinearities get a clip site. Max pooling is opt-in.
enum class ClipPolicy : std::uint8_t { relu_only = 0, relu_and_maxpool = 1 };

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

// Ordered layer stack ending in a single softmax. Construction validates that
// shapes compose and records a clip site after every ReLU (and optionally
// every max-pool) that precedes the final classification layer.
template <typename Real>
class BasicNetwork {
 public:
  BasicNetwork() = default;
  BasicNetwork(Shape input_shape, std::vector<Layer<Real>> layers,
               ClipPolicy policy = ClipPolicy::relu_only);

  const Shape& input_shape() const { return input_shape_; }
  const std::vector<Layer<Real>>& layers() const { return layers_; }
  std::size_t num_layers() const { return layers_.size(); }
  // Output shape of layer i.
  const Shape& output_shape(std::size_t i) const { return shapes_.at(i); }
  std::size_t num_classes() const { return shapes_.back()[0]; }
  const std::vector<std::size_t>& clip_sites() const { return clip_sites_; }
  bool is_clip_site(std::size_t layer) const;
  ClipPolicy clip_policy() const { return policy_; }

  // Parameters are mutable in place (trainer, tests); topology is not.
  Layer<Real>& layer(std::size_t i) { return layers_.at(i); }

  BasicNetwork with_clip_policy(ClipPolicy policy) const {
    return BasicNetwork(input_shape_, layers_, policy);
  }

  template <typename Other>
  BasicNetwork<Other> cast() const;

  friend bool operator==(const BasicNetwork& a, const BasicNetwork& b) {
    return a.input_shape_ == b.input_shape_ && a.layers_ == b.layers_ &&
           a.policy_ == b.policy_;
  }

 private:
  Shape input_shape_;
  std::vector<Layer<Real>> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> clip_sites_;
  ClipPolicy policy_ = ClipPolicy::relu_only;
};

using Network = BasicNetwork<float>;
using NetworkD = BasicNetwork<double>;

// Fluent construction; parameters start at zero.
template <typename Real>
class NetworkBuilder {
 public:
  explicit NetworkBuilder(Shape input_shape);

  NetworkBuilder& conv(std::size_t out_channels, std::size_t kernel,
                       std::size_t stride = 1, std::size_t padding = 0);
  NetworkBuilder& relu();
  NetworkBuilder& maxpool(std::size_t window, std::size_t stride);
  NetworkBuilder& flatten();
  NetworkBuilder& linear(std::size_t out_features);
  NetworkBuilder& softmax();

  BasicNetwork<Real> build(ClipPolicy policy = ClipPolicy::relu_only) const;

 private:
  Shape input_shape_;
  Shape current_;
  std::vector<Layer<Real>> layers_;
};

// conv(w1 3x3 pad 1) -> relu -> maxpool2 -> conv(w2 3x3 pad 1) -> relu ->
// maxpool2 -> flatten -> linear(classes) -> softmax.
Network make_fixture_network(const Shape& input_shape, std::size_t num_classes,
                             std::size_t width1 = 16, std::size_t width2 = 32);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename Real>
struct ForwardTape {
  BasicTensor<Real> input;
  // outputs[i] is the output of layer i; for nonlinearities this is h^l.
  std::vector<BasicTensor<Real>> outputs;
  // Flat argmax input index per output element, max-pool layers only.
  std::vector<std::vector<std::uint32_t>> pool_argmax;

  const BasicTensor<Real>& scores() const { return outputs.back(); }
  const BasicTensor<Real>& logits() const { return outputs[outputs.size() - 2]; }
  std::size_t predicted() const;
};

// Per clip site bounds from the original image: upper = max(0, h(x)),
// lower = min(0, h(x)).
template <typename Real>
struct ActivationBounds {
  struct Site {
    std::size_t layer = 0;
    BasicTensor<Real> upper;
    BasicTensor<Real> lower;
  };
  std::vector<Site> sites;

  const Site* find(std::size_t layer) const {
    for (const auto& s : sites)
      if (s.layer == layer) return &s;
    return nullptr;
  }
};

// Parameter gradients, indexed like the layer list; empty tensors for
// parameter-free layers.
template <typename Real>
struct ParamGrads {
  std::vector<BasicTensor<Real>> weight;
  std::vector<BasicTensor<Real>> bias;

  static ParamGrads zeros_like(const BasicNetwork<Real>& net);
  void clear();
};

template <typename Real>
ForwardTape<Real> forward(const BasicNetwork<Real>& net, const BasicTensor<Real>& input);

template <typename Real>
ActivationBounds<Real> capture_bounds(const BasicNetwork<Real>& net,
                                      const BasicTensor<Real>& x);

template <typename Real>
ActivationBounds<Real> bounds_from_tape(const BasicNetwork<Real>& net,
                                        const ForwardTape<Real>& tape);

// Gradient filter at one clip site:
//   grad[i] <- grad[i] * [h[i] <= upper[i]] * [h[i] >= lower[i]]
// where h is the current activation.
template <typename Real>
void filter_gradient(std::span<Real> grad, std::span<const Real> activation,
                     std::span<const Real> upper, std::span<const Real> lower);

// dLoss/dInput given dLoss/dScores. With bounds, every clip site filters the
// error flowing back through it; the forward pass is never altered.
template <typename Real>
BasicTensor<Real> backward_to_input(const BasicNetwork<Real>& net,
                                    const ForwardTape<Real>& tape,
                                    const BasicTensor<Real>& grad_scores,
                                    const std::type_identity_t<ActivationBounds<Real>>* bounds = nullptr);

// Backward pass seeded at the logits (pre-softmax). Accumulates parameter
// gradients into `params` when given; returns dLoss/dInput when
// `want_input`, otherwise an empty tensor.
template <typename Real>
BasicTensor<Real> backward_from_logits(const BasicNetwork<Real>& net,
                                       const ForwardTape<Real>& tape,
                                       const BasicTensor<Real>& grad_logits,
                                       const std::type_identity_t<ActivationBounds<Real>>* bounds,
                                       std::type_identity_t<ParamGrads<Real>>* params,
                                       bool want_input);

// Softmax with max subtraction.
template <typename Real>
BasicTensor<Real> softmax(const BasicTensor<Real>& logits);

// Lowest index wins ties.
template <typename Real>
std::size_t argmax(const BasicTensor<Real>& v);

}  // namespace maskopt
