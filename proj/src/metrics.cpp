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

#include "maskopt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskopt/image_ops.hpp"
#include "maskopt/parallel.hpp"

namespace maskopt {

Tensor importance_map(const ExplanationResult& result) {
  if (result.game != GameKind::deletion)
    throw ArgumentError("importance_map needs a deletion-game result, got " +
                        std::string(to_string(result.game)));
  const Tensor& m = result.mask;
  if (m.rank() != 3) throw ShapeError("importance_map: mask must be [C, H, W]");
  const std::size_t channels = m.dim(0), plane = m.dim(1) * m.dim(2);
  Tensor out({m.dim(1), m.dim(2)});
  for (std::size_t p = 0; p < plane; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += 1.0 - m[c * plane + p];
    out[p] = static_cast<float>(acc / static_cast<double>(channels));
  }
  return out;
}

std::vector<double> deletion_schedule() {
  std::vector<double> out;
  out.reserve(176);
  for (int k = 0; k <= 100; ++k) out.push_back(0.0025 * k);
  for (int k = 1; k <= 75; ++k) out.push_back(0.25 + 0.01 * k);
  return out;
}

double trapezoid_auc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("trapezoid_auc: x and y differ in length");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

std::vector<std::size_t> rank_pixels(const Tensor& importance) {
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });
  return order;
}

DeletionCurve deletion_curve(const Network& net, const Tensor& x, const Tensor& importance,
                             std::span<const double> fractions) {
  if (x.rank() != 3 || importance.size() != x.dim(1) * x.dim(2))
    throw ShapeError("deletion_curve: importance " + shape_string(importance.shape()) +
                     " does not cover image " + shape_string(x.shape()));
  std::vector<double> schedule;
  if (fractions.empty()) {
    schedule = deletion_schedule();
    fractions = schedule;
  }
  for (std::size_t i = 0; i < fractions.size(); ++i)
    if (fractions[i] < 0.0 || fractions[i] > 1.0 || (i > 0 && fractions[i] <= fractions[i - 1]))
      throw ArgumentError("deletion_curve: fractions must increase within [0, 1]");

  const std::size_t cls = forward(net, x).predicted();
  const std::vector<std::size_t> order = rank_pixels(importance);
  const std::size_t channels = x.dim(0), plane = importance.size();

  DeletionCurve curve;
  Tensor work = x;
  std::size_t removed = 0;
  for (double f : fractions) {
    const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(plane)));
    for (; removed < k; ++removed)
      for (std::size_t c = 0; c < channels; ++c) work[c * plane + order[removed]] = 0.0f;
    curve.fractions.push_back(f);
    curve.probs.push_back(forward(net, work).scores()[cls]);
  }
  curve.auc = trapezoid_auc(curve.fractions, curve.probs);
  return curve;
}

Tensor deletion_game_importance(const Network& net, const Tensor& x, std::uint64_t seed,
                                int iterations) {
  GameConfig cfg;
  cfg.game = GameKind::deletion;
  cfg.learning_rate = 0.3;
  cfg.iterations = iterations;
  cfg.seed = seed;
  const ExplanationResult res = line_search_lambda(net, x, cfg, deletion_metric_line_search());
  return importance_map(res);
}

Tensor random_importance(std::size_t height, std::size_t width, Rng& rng) {
  return uniform_noise<float>({height, width}, 0.0, 1.0, rng);
}

Tensor gradient_importance(const Network& net, const Tensor& x) {
  const auto tape = forward(net, x);
  const std::size_t cls = tape.predicted();
  Tensor seed(tape.scores().shape());
  seed[cls] = 1.0f;
  const Tensor grad = backward_to_input(net, tape, seed);
  const std::size_t channels = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor out({x.dim(1), x.dim(2)});
  for (std::size_t p = 0; p < plane; ++p) {
    float peak = 0.0f;
    for (std::size_t c = 0; c < channels; ++c) peak = std::max(peak, std::abs(grad[c * plane + p]));
    out[p] = peak;
  }
  return out;
}

void write_curve_csv(std::ostream& out, const DeletionCurve& curve) {
  out << "fraction,prob\n";
  for (std::size_t i = 0; i < curve.fractions.size(); ++i)
    out << curve.fractions[i] << ',' << curve.probs[i] << '\n';
}

double entropy(const Tensor& scores) {
  double h = 0.0;
  for (float p : scores.values())
    if (p > 0.0f) h -= static_cast<double>(p) * std::log(static_cast<double>(p));
  return h;
}

namespace {

EntropyRow summarize(std::string name, const std::vector<double>& values) {
  EntropyRow row;
  row.reference = std::move(name);
  row.samples = values.size();
  if (values.empty()) return row;
  const double n = static_cast<double>(values.size());
  row.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.stddev = std::sqrt(ss / n);
  return row;
}

}  // namespace

std::vector<EntropyRow> reference_entropy_report(const Network& net, const Normalization& norm,
                                                 const Dataset& normalized_data,
                                                 std::size_t n_trials, Rng& rng,
                                                 std::size_t jobs) {
  if (n_trials == 0) throw ArgumentError("reference_entropy_report: n_trials must be >= 1");
  const Shape& shape = net.input_shape();
  const std::size_t n_images = std::min(n_trials, normalized_data.size());

  // Every sample gets its own stream so the report does not depend on jobs.
  auto run = [&](std::size_t n, auto&& make_input) {
    std::vector<double> values(n);
    std::vector<Rng> streams;
    for (std::size_t i = 0; i < n; ++i) streams.push_back(rng.split(rng.next_u64()));
    parallel_for(n, jobs, [&](std::size_t i) {
      values[i] = entropy(forward(net, make_input(i, streams[i])).scores());
    });
    return values;
  };

  std::vector<EntropyRow> rows;
  rows.push_back(summarize("zero", {entropy(forward(net, Tensor::zeros(shape)).scores())}));
  for (double sigma : {8.0, 32.0}) {
    const Reference ref{Reference::Kind::gaussian_noise, sigma};
    const Tensor zero = Tensor::zeros(shape);
    rows.push_back(summarize(to_string(ref), run(n_trials, [&](std::size_t, Rng& r) {
                               return make_reference(zero, ref, norm, r);
                             })));
  }
  for (double sigma : {5.0, 10.0}) {
    const Reference ref{Reference::Kind::blurred, sigma};
    rows.push_back(summarize(to_string(ref), run(n_images, [&](std::size_t i, Rng& r) {
                               return make_reference(normalized_data.images[i], ref, norm, r);
                             })));
  }
  rows.push_back(summarize("dataset", run(n_images, [&](std::size_t i, Rng&) {
                             return normalized_data.images[i];
                           })));
  EntropyRow max_row;
  max_row.reference = "maximum";
  max_row.mean = std::log(static_cast<double>(net.num_classes()));
  max_row.samples = 1;
  rows.push_back(max_row);
  return rows;
}

void write_entropy_csv(std::ostream& out, std::span<const EntropyRow> rows) {
  out << "reference,mean,stddev,samples\n";
  for (const auto& r : rows)
    out << r.reference << ',' << r.mean << ',' << r.stddev << ',' << r.samples << '\n';
}

ColorPerm inverse(ColorPerm perm) {
  return perm == ColorPerm::rbg ? ColorPerm::grb : ColorPerm::rbg;
}

std::string_view to_string(ColorPerm perm) { return perm == ColorPerm::rbg ? "RBG" : "GRB"; }

Tensor color_swap(const Tensor& x, ColorPerm perm) {
  if (x.rank() != 3 || x.dim(0) != 3)
    throw ShapeError("color_swap needs a [3, H, W] image, got " + shape_string(x.shape()));
  // Source slot for each destination slot of the BGR-ordered result.
  static constexpr std::size_t kRbg[3] = {2, 0, 1};
  static constexpr std::size_t kGrb[3] = {1, 2, 0};
  const std::size_t* src = perm == ColorPerm::rbg ? kRbg : kGrb;
  const std::size_t plane = x.dim(1) * x.dim(2);
  Tensor out(x.shape());
  for (std::size_t c = 0; c < 3; ++c)
    std::copy_n(x.data() + src[c] * plane, plane, out.data() + c * plane);
  return out;
}

ColorBiasRow color_bias_ratio(const Network& net, const Dataset& normalized_data,
                              std::size_t class_id, std::size_t jobs) {
  if (class_id >= net.num_classes()) throw ArgumentError("color_bias_ratio: class out of range");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < normalized_data.size(); ++i)
    if (normalized_data.labels[i] == class_id) members.push_back(i);

  // 0: misclassified, 1: correct before the swap; bits 1 and 2: kept after RBG / GRB.
  std::vector<int> state(members.size(), 0);
  parallel_for(members.size(), jobs, [&](std::size_t k) {
    const Tensor& x = normalized_data.images[members[k]];
    if (forward(net, x).predicted() != class_id) return;
    int s = 1;
    if (forward(net, color_swap(x, ColorPerm::rbg)).predicted() == class_id) s |= 2;
    if (forward(net, color_swap(x, ColorPerm::grb)).predicted() == class_id) s |= 4;
    state[k] = s;
  });

  ColorBiasRow row;
  row.class_id = class_id;
  std::size_t kept_rbg = 0, kept_grb = 0;
  for (int s : state) {
    row.n_correct += s & 1;
    kept_rbg += (s >> 1) & 1;
    kept_grb += (s >> 2) & 1;
  }
  if (row.n_correct > 0) {
    const double n = static_cast<double>(row.n_correct);
    row.rbg = static_cast<double>(kept_rbg) / n;
    row.grb = static_cast<double>(kept_grb) / n;
    row.average = 0.5 * (*row.rbg + *row.grb);
  }
  return row;
}

void write_color_bias_csv(std::ostream& out, std::span<const ColorBiasRow> rows) {
  auto ratio = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "nan";
  };
  out << "id,class,n,avg,RBG,GRB\n";
  for (const auto& r : rows) {
    out << r.class_id << ',' << r.class_id << ',' << r.n_correct << ',';
    ratio(r.average);
    out << ',';
    ratio(r.rbg);
    out << ',';
    ratio(r.grb);
    out << '\n';
  }
}

Tensor binarize_mask(const Tensor& importance, double threshold_frac) {
  if (importance.empty()) return importance;
  const float peak = reduce(importance, Reduction::max);
  Tensor out(importance.shape());
  if (!(peak > 0.0f)) return out;
  const double cut = threshold_frac * static_cast<double>(peak);
  for (std::size_t i = 0; i < importance.size(); ++i)
    out[i] = static_cast<double>(importance[i]) >= cut ? 1.0f : 0.0f;
  return out;
}

}  // namespace maskopt
