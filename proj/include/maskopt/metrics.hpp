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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/games.hpp"
#include "maskopt/network.hpp"
#include "maskopt/rng.hpp"
#include "maskopt/tensor.hpp"

namespace maskopt {

// ---------------------------------------------------------------------------
// Deletion metric
// ---------------------------------------------------------------------------

// Channel mean of (1 - m) as an [H, W] map. Deletion results only.
Tensor importance_map(const ExplanationResult& result);

// 0, then 100 steps of 0.0025, then 75 steps of 0.01: 176 points ending at 1.
std::vector<double> deletion_schedule();

struct DeletionCurve {
  std::vector<double> fractions;
  std::vector<double> probs;
  double auc = 0.0;
};

// Trapezoidal rule over x.
double trapezoid_auc(std::span<const double> x, std::span<const double> y);

// Pixel indices by descending importance, row-major order among ties.
std::vector<std::size_t> rank_pixels(const Tensor& importance);

// Zeroes the round(f * H * W) most important pixels (all channels) at each
// schedule fraction and records the score of x's most likely class.
DeletionCurve deletion_curve(const Network& net, const Tensor& x, const Tensor& importance,
                             std::span<const double> fractions = {});

// Importance from a deletion game run with the metric's line search
// (learning rate 0.3, lambdas 1e-7 .. 1e-10, 2% score drop).
Tensor deletion_game_importance(const Network& net, const Tensor& x, std::uint64_t seed,
                                int iterations = 500);

// Baselines: i.i.d. uniform scores, and |d score / d x| maximized over
// channels (plain backpropagation, no filtering).
Tensor random_importance(std::size_t height, std::size_t width, Rng& rng);
Tensor gradient_importance(const Network& net, const Tensor& x);

// fraction,prob rows.
void write_curve_csv(std::ostream& out, const DeletionCurve& curve);

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

// -sum p ln p with 0 ln 0 = 0.
double entropy(const Tensor& scores);

struct EntropyRow {
  std::string reference;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t samples = 0;
};

// Rows: zero image, Gaussian noise (sigma 8 and 32 raw pixel units), blurred
// dataset images (sigma 5 and 10), the dataset images themselves, and ln C.
// Noise rows draw n_trials images; dataset rows use up to n_trials images.
std::vector<EntropyRow> reference_entropy_report(const Network& net, const Normalization& norm,
                                                 const Dataset& normalized_data,
                                                 std::size_t n_trials, Rng& rng,
                                                 std::size_t jobs = 1);

// reference,mean,stddev,samples rows.
void write_entropy_csv(std::ostream& out, std::span<const EntropyRow> rows);

// ---------------------------------------------------------------------------
// Colour bias
// ---------------------------------------------------------------------------

// Channels are stored in BGR order. The name gives the resulting order:
// RBG puts R in slot 0, B in slot 1, G in slot 2.
enum class ColorPerm { rbg, grb };

ColorPerm inverse(ColorPerm perm);
std::string_view to_string(ColorPerm perm);
Tensor color_swap(const Tensor& x, ColorPerm perm);

struct ColorBiasRow {
  std::size_t class_id = 0;
  std::size_t n_correct = 0;
  // Unset when n_correct is 0.
  std::optional<double> rbg;
  std::optional<double> grb;
  std::optional<double> average;
};

// Among images of class c predicted correctly, the fraction still predicted
// as c after each swap.
ColorBiasRow color_bias_ratio(const Network& net, const Dataset& normalized_data,
                              std::size_t class_id, std::size_t jobs = 1);

// id,class,n,avg,RBG,GRB rows (class is the numeric label); undefined ratios
// are written as "nan".
void write_color_bias_csv(std::ostream& out, std::span<const ColorBiasRow> rows);

// ---------------------------------------------------------------------------
// Binarization
// ---------------------------------------------------------------------------

// 1 where v >= threshold_frac * max, else 0. All-zero maps stay zero.
Tensor binarize_mask(const Tensor& importance, double threshold_frac = 0.04);

}  // namespace maskopt
