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

#include "maskopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace maskopt {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::linear: return "linear";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

namespace {

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string layer_error(std::size_t i, const std::string& msg) {
  return "layer " + std::to_string(i) + ": " + msg;
}

// Output positions [lo, hi) whose input coordinate o*stride + k - pad lies in
// [0, extent).
std::pair<int, int> valid_range(int k, int pad, int stride, int extent, int out_extent) {
  int lo = 0;
  if (pad - k > 0) lo = (pad - k + stride - 1) / stride;
  int hi = 0;
  const int top = extent - 1 + pad - k;
  if (top >= 0) hi = top / stride + 1;
  hi = std::min(hi, out_extent);
  return {lo, std::max(lo, hi)};
}

}  // namespace

// ---------------------------------------------------------------------------
// BasicNetwork
// ---------------------------------------------------------------------------

template <typename Real>
BasicNetwork<Real>::BasicNetwork(Shape input_shape, std::vector<Layer<Real>> layers,
                                 ClipPolicy policy)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), policy_(policy) {
  if (layers_.empty()) throw ShapeError("network has no layers");
  Shape cur = input_shape_;
  std::size_t last_linear = 0;
  bool have_linear = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const bool is_last = i + 1 == layers_.size();
    std::visit(
        overloaded{
            [&](const Conv2d<Real>& c) {
              if (cur.size() != 3 || cur[0] != c.in_channels)
                throw ShapeError(layer_error(i, "conv2d expects [" +
                                                    std::to_string(c.in_channels) +
                                                    ",H,W], got " + shape_string(cur)));
              if (c.weight.shape() != Shape{c.out_channels, c.in_channels, c.kernel, c.kernel} ||
                  c.bias.shape() != Shape{c.out_channels})
                throw ShapeError(layer_error(i, "conv2d parameter shape mismatch"));
              if (c.stride == 0 || c.kernel == 0)
                throw ShapeError(layer_error(i, "conv2d stride/kernel must be positive"));
              const std::size_t h = cur[1] + 2 * c.padding;
              const std::size_t w = cur[2] + 2 * c.padding;
              if (h < c.kernel || w < c.kernel)
                throw ShapeError(layer_error(i, "conv2d kernel larger than input"));
              cur = {c.out_channels, (h - c.kernel) / c.stride + 1, (w - c.kernel) / c.stride + 1};
            },
            [&](const Relu&) {},
            [&](const MaxPool& p) {
              if (cur.size() != 3) throw ShapeError(layer_error(i, "maxpool expects [C,H,W]"));
              if (p.window == 0 || p.stride == 0 || cur[1] < p.window || cur[2] < p.window)
                throw ShapeError(layer_error(i, "maxpool window does not fit"));
              cur = {cur[0], (cur[1] - p.window) / p.stride + 1, (cur[2] - p.window) / p.stride + 1};
            },
            [&](const Flatten&) { cur = {shape_size(cur)}; },
            [&](const Linear<Real>& l) {
              if (cur.size() != 1 || cur[0] != l.in_features)
                throw ShapeError(layer_error(i, "linear expects [" +
                                                    std::to_string(l.in_features) + "], got " +
                                                    shape_string(cur)));
              if (l.weight.shape() != Shape{l.out_features, l.in_features} ||
                  l.bias.shape() != Shape{l.out_features})
                throw ShapeError(layer_error(i, "linear parameter shape mismatch"));
              cur = {l.out_features};
              last_linear = i;
              have_linear = true;
            },
            [&](const Softmax&) {
              if (!is_last) throw ShapeError(layer_error(i, "softmax must be the last layer"));
              if (cur.size() != 1) throw ShapeError(layer_error(i, "softmax expects a vector"));
            },
        },
        layer);
    shapes_.push_back(cur);
  }
  if (layer_kind(layers_.back()) != LayerKind::softmax)
    throw ShapeError("network must end in a softmax layer");
  if (layers_.size() < 2) throw ShapeError("network needs a layer before softmax");

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (have_linear && i >= last_linear) break;
    const auto kind = layer_kind(layers_[i]);
    if (kind == LayerKind::relu ||
        (kind == LayerKind::maxpool && policy_ == ClipPolicy::relu_and_maxpool))
      clip_sites_.push_back(i);
  }
}

template <typename Real>
bool BasicNetwork<Real>::is_clip_site(std::size_t layer) const {
  return std::find(clip_sites_.begin(), clip_sites_.end(), layer) != clip_sites_.end();
}

template <typename Real>
template <typename Other>
BasicNetwork<Other> BasicNetwork<Real>::cast() const {
  std::vector<Layer<Other>> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) {
    std::visit(overloaded{
                   [&](const Conv2d<Real>& c) {
                     out.push_back(Conv2d<Other>{c.in_channels, c.out_channels, c.kernel,
                                                 c.stride, c.padding,
                                                 c.weight.template cast<Other>(),
                                                 c.bias.template cast<Other>()});
                   },
                   [&](const Linear<Real>& l) {
                     out.push_back(Linear<Other>{l.in_features, l.out_features,
                                                 l.weight.template cast<Other>(),
                                                 l.bias.template cast<Other>()});
                   },
                   [&](const Relu& r) { out.push_back(r); },
                   [&](const MaxPool& p) { out.push_back(p); },
                   [&](const Flatten& f) { out.push_back(f); },
                   [&](const Softmax& s) { out.push_back(s); },
               },
               layer);
  }
  return BasicNetwork<Other>(input_shape_, std::move(out), policy_);
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

template <typename Real>
NetworkBuilder<Real>::NetworkBuilder(Shape input_shape)
    : input_shape_(input_shape), current_(std::move(input_shape)) {}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::conv(std::size_t out_channels, std::size_t kernel,
                                                 std::size_t stride, std::size_t padding) {
  if (current_.size() != 3) throw ShapeError("conv needs a [C,H,W] input");
  Conv2d<Real> c;
  c.in_channels = current_[0];
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = padding;
  c.weight = BasicTensor<Real>({out_channels, current_[0], kernel, kernel});
  c.bias = BasicTensor<Real>({out_channels});
  current_ = {out_channels, (current_[1] + 2 * padding - kernel) / stride + 1,
              (current_[2] + 2 * padding - kernel) / stride + 1};
  layers_.push_back(std::move(c));
  return *this;
}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::relu() {
  layers_.push_back(Relu{});
  return *this;
}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::maxpool(std::size_t window, std::size_t stride) {
  layers_.push_back(MaxPool{window, stride});
  if (current_.size() == 3 && current_[1] >= window && current_[2] >= window)
    current_ = {current_[0], (current_[1] - window) / stride + 1,
                (current_[2] - window) / stride + 1};
  return *this;
}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::flatten() {
  layers_.push_back(Flatten{});
  current_ = {shape_size(current_)};
  return *this;
}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::linear(std::size_t out_features) {
  if (current_.size() != 1) throw ShapeError("linear needs a flat input");
  Linear<Real> l;
  l.in_features = current_[0];
  l.out_features = out_features;
  l.weight = BasicTensor<Real>({out_features, current_[0]});
  l.bias = BasicTensor<Real>({out_features});
  current_ = {out_features};
  layers_.push_back(std::move(l));
  return *this;
}

template <typename Real>
NetworkBuilder<Real>& NetworkBuilder<Real>::softmax() {
  layers_.push_back(Softmax{});
  return *this;
}

template <typename Real>
BasicNetwork<Real> NetworkBuilder<Real>::build(ClipPolicy policy) const {
  return BasicNetwork<Real>(input_shape_, layers_, policy);
}

Network make_fixture_network(const Shape& input_shape, std::size_t num_classes,
                             std::size_t width1, std::size_t width2) {
  return NetworkBuilder<float>(input_shape)
      .conv(width1, 3, 1, 1)
      .relu()
      .maxpool(2, 2)
      .conv(width2, 3, 1, 1)
      .relu()
      .maxpool(2, 2)
      .flatten()
      .linear(num_classes)
      .softmax()
      .build();
}

// ---------------------------------------------------------------------------
// Layer kernels
// ---------------------------------------------------------------------------

namespace {

template <typename Real>
BasicTensor<Real> conv_forward(const Conv2d<Real>& c, const BasicTensor<Real>& in,
                               const Shape& out_shape) {
  const int ih = static_cast<int>(in.dim(1)), iw = static_cast<int>(in.dim(2));
  const int oh = static_cast<int>(out_shape[1]), ow = static_cast<int>(out_shape[2]);
  const int k = static_cast<int>(c.kernel), s = static_cast<int>(c.stride),
            p = static_cast<int>(c.padding);
  BasicTensor<Real> out(out_shape);
  for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
    Real* plane = out.data() + oc * oh * ow;
    std::fill(plane, plane + oh * ow, c.bias[oc]);
    for (std::size_t ic = 0; ic < c.in_channels; ++ic) {
      const Real* src = in.data() + ic * ih * iw;
      for (int ky = 0; ky < k; ++ky) {
        const auto [y0, y1] = valid_range(ky, p, s, ih, oh);
        for (int kx = 0; kx < k; ++kx) {
          const auto [x0, x1] = valid_range(kx, p, s, iw, ow);
          const Real w = c.weight[((oc * c.in_channels + ic) * k + ky) * k + kx];
          for (int oy = y0; oy < y1; ++oy) {
            const int base = (oy * s + ky - p) * iw + (kx - p);
            Real* dst = plane + oy * ow;
            for (int ox = x0; ox < x1; ++ox) dst[ox] += w * src[base + ox * s];
          }
        }
      }
    }
  }
  return out;
}

template <typename Real>
BasicTensor<Real> conv_backward(const Conv2d<Real>& c, const BasicTensor<Real>& in,
                                const BasicTensor<Real>& grad_out, BasicTensor<Real>* dweight,
                                BasicTensor<Real>* dbias, bool want_input) {
  const int ih = static_cast<int>(in.dim(1)), iw = static_cast<int>(in.dim(2));
  const int oh = static_cast<int>(grad_out.dim(1)), ow = static_cast<int>(grad_out.dim(2));
  const int k = static_cast<int>(c.kernel), s = static_cast<int>(c.stride),
            p = static_cast<int>(c.padding);
  BasicTensor<Real> grad_in;
  if (want_input) grad_in = BasicTensor<Real>(in.shape());
  for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
    const Real* g = grad_out.data() + oc * oh * ow;
    if (dbias) {
      Real acc = 0;
      for (int i = 0; i < oh * ow; ++i) acc += g[i];
      (*dbias)[oc] += acc;
    }
    for (std::size_t ic = 0; ic < c.in_channels; ++ic) {
      const Real* src = in.data() + ic * ih * iw;
      Real* dst = want_input ? grad_in.data() + ic * ih * iw : nullptr;
      for (int ky = 0; ky < k; ++ky) {
        const auto [y0, y1] = valid_range(ky, p, s, ih, oh);
        for (int kx = 0; kx < k; ++kx) {
          const auto [x0, x1] = valid_range(kx, p, s, iw, ow);
          const std::size_t widx = ((oc * c.in_channels + ic) * k + ky) * k + kx;
          const Real w = c.weight[widx];
          Real acc = 0;
          for (int oy = y0; oy < y1; ++oy) {
            const int base = (oy * s + ky - p) * iw + (kx - p);
            const Real* grow = g + oy * ow;
            if (dweight) {
              for (int ox = x0; ox < x1; ++ox) acc += grow[ox] * src[base + ox * s];
            }
            if (dst) {
              for (int ox = x0; ox < x1; ++ox) dst[base + ox * s] += w * grow[ox];
            }
          }
          if (dweight) (*dweight)[widx] += acc;
        }
      }
    }
  }
  return grad_in;
}

template <typename Real>
BasicTensor<Real> maxpool_forward(const MaxPool& p, const BasicTensor<Real>& in,
                                  const Shape& out_shape, std::vector<std::uint32_t>& argmax) {
  const std::size_t ih = in.dim(1), iw = in.dim(2);
  const std::size_t oh = out_shape[1], ow = out_shape[2];
  BasicTensor<Real> out(out_shape);
  argmax.assign(out.size(), 0);
  for (std::size_t c = 0; c < out_shape[0]; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (c * ih + oy * p.stride) * iw + ox * p.stride;
        Real best_v = in[best];
        for (std::size_t wy = 0; wy < p.window; ++wy) {
          for (std::size_t wx = 0; wx < p.window; ++wx) {
            const std::size_t idx = (c * ih + oy * p.stride + wy) * iw + ox * p.stride + wx;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (c * oh + oy) * ow + ox;
        out[o] = best_v;
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

template <typename Real>
BasicTensor<Real> linear_forward(const Linear<Real>& l, const BasicTensor<Real>& in) {
  BasicTensor<Real> out({l.out_features});
  for (std::size_t o = 0; o < l.out_features; ++o) {
    const Real* w = l.weight.data() + o * l.in_features;
    Real acc = l.bias[o];
    for (std::size_t i = 0; i < l.in_features; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
  return out;
}

template <typename Real>
BasicTensor<Real> linear_backward(const Linear<Real>& l, const BasicTensor<Real>& in,
                                  const BasicTensor<Real>& grad_out, BasicTensor<Real>* dweight,
                                  BasicTensor<Real>* dbias, bool want_input) {
  BasicTensor<Real> grad_in;
  if (want_input) grad_in = BasicTensor<Real>({l.in_features});
  for (std::size_t o = 0; o < l.out_features; ++o) {
    const Real g = grad_out[o];
    if (dbias) (*dbias)[o] += g;
    const Real* w = l.weight.data() + o * l.in_features;
    if (dweight) {
      Real* dw = dweight->data() + o * l.in_features;
      for (std::size_t i = 0; i < l.in_features; ++i) dw[i] += g * in[i];
    }
    if (want_input) {
      for (std::size_t i = 0; i < l.in_features; ++i) grad_in[i] += w[i] * g;
    }
  }
  return grad_in;
}

}  // namespace

template <typename Real>
BasicTensor<Real> softmax(const BasicTensor<Real>& logits) {
  const Real peak = reduce(logits, Reduction::max);
  BasicTensor<Real> out(logits.shape());
  Real total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (auto& v : out.values()) v /= total;
  return out;
}

template <typename Real>
std::size_t argmax(const BasicTensor<Real>& v) {
  if (v.empty()) throw ArgumentError("argmax of empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <typename Real>
std::size_t ForwardTape<Real>::predicted() const {
  return argmax(scores());
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

template <typename Real>
ForwardTape<Real> forward(const BasicNetwork<Real>& net, const BasicTensor<Real>& input) {
  if (input.shape() != net.input_shape())
    throw ShapeError("forward: input shape " + shape_string(input.shape()) +
                     " does not match network input " + shape_string(net.input_shape()));
  ForwardTape<Real> tape;
  tape.input = input;
  tape.outputs.reserve(net.num_layers());
  tape.pool_argmax.resize(net.num_layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const BasicTensor<Real>& in = i == 0 ? tape.input : tape.outputs[i - 1];
    const Shape& out_shape = net.output_shape(i);
    BasicTensor<Real> out = std::visit(
        overloaded{
            [&](const Conv2d<Real>& c) { return conv_forward(c, in, out_shape); },
            [&](const Relu&) {
              return map(in, [](Real v) { return v > Real(0) ? v : Real(0); });
            },
            [&](const MaxPool& p) {
              return maxpool_forward(p, in, out_shape, tape.pool_argmax[i]);
            },
            [&](const Flatten&) { return in.reshaped(out_shape); },
            [&](const Linear<Real>& l) { return linear_forward(l, in); },
            [&](const Softmax&) { return softmax(in); },
        },
        net.layers()[i]);
    tape.outputs.push_back(std::move(out));
  }
  return tape;
}

template <typename Real>
ActivationBounds<Real> bounds_from_tape(const BasicNetwork<Real>& net,
                                        const ForwardTape<Real>& tape) {
  ActivationBounds<Real> bounds;
  for (std::size_t site : net.clip_sites()) {
    const auto& h = tape.outputs.at(site);
    bounds.sites.push_back({site, map(h, [](Real v) { return std::max(Real(0), v); }),
                            map(h, [](Real v) { return std::min(Real(0), v); })});
  }
  return bounds;
}

template <typename Real>
ActivationBounds<Real> capture_bounds(const BasicNetwork<Real>& net,
                                      const BasicTensor<Real>& x) {
  return bounds_from_tape(net, forward(net, x));
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

template <typename Real>
void filter_gradient(std::span<Real> grad, std::span<const Real> activation,
                     std::span<const Real> upper, std::span<const Real> lower) {
  if (grad.size() != activation.size() || grad.size() != upper.size() ||
      grad.size() != lower.size())
    throw ShapeError("filter_gradient: length mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const Real below_upper = activation[i] <= upper[i] ? Real(1) : Real(0);
    const Real above_lower = activation[i] >= lower[i] ? Real(1) : Real(0);
    grad[i] = grad[i] * below_upper * above_lower;
  }
}

template <typename Real>
ParamGrads<Real> ParamGrads<Real>::zeros_like(const BasicNetwork<Real>& net) {
  ParamGrads<Real> g;
  for (const auto& layer : net.layers()) {
    std::visit(overloaded{
                   [&](const Conv2d<Real>& c) {
                     g.weight.emplace_back(c.weight.shape());
                     g.bias.emplace_back(c.bias.shape());
                   },
                   [&](const Linear<Real>& l) {
                     g.weight.emplace_back(l.weight.shape());
                     g.bias.emplace_back(l.bias.shape());
                   },
                   [&](const auto&) {
                     g.weight.emplace_back();
                     g.bias.emplace_back();
                   },
               },
               layer);
  }
  return g;
}

template <typename Real>
void ParamGrads<Real>::clear() {
  for (auto& w : weight) w.fill(Real(0));
  for (auto& b : bias) b.fill(Real(0));
}

namespace {

// Reverse sweep from layer `top` (whose output gradient is `grad`) down to
// the input.
template <typename Real>
BasicTensor<Real> backprop(const BasicNetwork<Real>& net, const ForwardTape<Real>& tape,
                           BasicTensor<Real> grad, std::size_t top,
                           const ActivationBounds<Real>* bounds, ParamGrads<Real>* params,
                           bool want_input) {
  if (tape.outputs.size() != net.num_layers() || tape.input.shape() != net.input_shape())
    throw ShapeError("backward: tape was not produced by this network");
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    if (tape.outputs[i].shape() != net.output_shape(i))
      throw ShapeError("backward: tape was not produced by this network");
  }
  if (params && params->weight.size() != net.num_layers())
    throw ShapeError("backward: parameter gradient buffers do not match network");

  for (std::size_t step = top + 1; step-- > 0;) {
    const std::size_t i = step;
    if (bounds && net.is_clip_site(i)) {
      if (const auto* site = bounds->find(i)) {
        if (site->upper.shape() != grad.shape())
          throw ShapeError("backward: bounds shape mismatch at clip site");
        filter_gradient<Real>(grad.values(), tape.outputs[i].values(), site->upper.values(),
                              site->lower.values());
      }
    }
    // Nothing below the first layer needs a gradient unless the caller asked.
    const bool need_below = want_input || i > 0;
    const BasicTensor<Real>& in = i == 0 ? tape.input : tape.outputs[i - 1];
    grad = std::visit(
        overloaded{
            [&](const Conv2d<Real>& c) {
              return conv_backward(c, in, grad, params ? &params->weight[i] : nullptr,
                                   params ? &params->bias[i] : nullptr, need_below);
            },
            [&](const Relu&) {
              return map_zip(in, grad, [](Real x, Real g) { return x > Real(0) ? g : Real(0); });
            },
            [&](const MaxPool&) {
              BasicTensor<Real> out(in.shape());
              const auto& arg = tape.pool_argmax[i];
              for (std::size_t o = 0; o < grad.size(); ++o) out[arg[o]] += grad[o];
              return out;
            },
            [&](const Flatten&) { return grad.reshaped(in.shape()); },
            [&](const Linear<Real>& l) {
              return linear_backward(l, in, grad, params ? &params->weight[i] : nullptr,
                                     params ? &params->bias[i] : nullptr, need_below);
            },
            [&](const Softmax&) {
              const auto& p = tape.outputs[i];
              Real dot = 0;
              for (std::size_t j = 0; j < p.size(); ++j) dot += grad[j] * p[j];
              BasicTensor<Real> out(p.shape());
              for (std::size_t j = 0; j < p.size(); ++j) out[j] = p[j] * (grad[j] - dot);
              return out;
            },
        },
        net.layers()[i]);
    if (!need_below) return BasicTensor<Real>();
  }
  return grad;
}

}  // namespace

template <typename Real>
BasicTensor<Real> backward_to_input(const BasicNetwork<Real>& net, const ForwardTape<Real>& tape,
                                    const BasicTensor<Real>& grad_scores,
                                    const std::type_identity_t<ActivationBounds<Real>>* bounds) {
  if (tape.outputs.empty() || grad_scores.shape() != tape.scores().shape())
    throw ShapeError("backward_to_input: gradient does not match score shape");
  return backprop<Real>(net, tape, grad_scores, net.num_layers() - 1, bounds, nullptr, true);
}

template <typename Real>
BasicTensor<Real> backward_from_logits(const BasicNetwork<Real>& net,
                                       const ForwardTape<Real>& tape,
                                       const BasicTensor<Real>& grad_logits,
                                       const std::type_identity_t<ActivationBounds<Real>>* bounds,
                                       std::type_identity_t<ParamGrads<Real>>* params,
                                       bool want_input) {
  if (tape.outputs.size() < 2 || grad_logits.shape() != tape.logits().shape())
    throw ShapeError("backward_from_logits: gradient does not match logit shape");
  return backprop<Real>(net, tape, grad_logits, net.num_layers() - 2, bounds, params, want_input);
}

#define MASKOPT_INSTANTIATE(Real)                                                            \
  template class BasicNetwork<Real>;                                                         \
  template class NetworkBuilder<Real>;                                                       \
  template struct ForwardTape<Real>;                                                         \
  template struct ParamGrads<Real>;                                                          \
  template ForwardTape<Real> forward(const BasicNetwork<Real>&, const BasicTensor<Real>&);   \
  template ActivationBounds<Real> capture_bounds(const BasicNetwork<Real>&,                  \
                                                 const BasicTensor<Real>&);                  \
  template ActivationBounds<Real> bounds_from_tape(const BasicNetwork<Real>&,                \
                                                   const ForwardTape<Real>&);                \
  template void filter_gradient(std::span<Real>, std::span<const Real>,                      \
                                std::span<const Real>, std::span<const Real>);               \
  template BasicTensor<Real> backward_to_input(const BasicNetwork<Real>&,                    \
                                               const ForwardTape<Real>&,                     \
                                               const BasicTensor<Real>&,                     \
                                               const ActivationBounds<Real>*);               \
  template BasicTensor<Real> backward_from_logits(                                           \
      const BasicNetwork<Real>&, const ForwardTape<Real>&, const BasicTensor<Real>&,         \
      const ActivationBounds<Real>*, ParamGrads<Real>*, bool);                               \
  template BasicTensor<Real> softmax(const BasicTensor<Real>&);                              \
  template std::size_t argmax(const BasicTensor<Real>&);

MASKOPT_INSTANTIATE(float)
MASKOPT_INSTANTIATE(double)
#undef MASKOPT_INSTANTIATE

template BasicNetwork<double> BasicNetwork<float>::cast<double>() const;
template BasicNetwork<float> BasicNetwork<double>::cast<float>() const;
template BasicNetwork<float> BasicNetwork<float>::cast<float>() const;
template BasicNetwork<double> BasicNetwork<double>::cast<double>() const;

}  // namespace maskopt
