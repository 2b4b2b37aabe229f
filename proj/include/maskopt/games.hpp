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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/network.hpp"
#include "maskopt/rng.hpp"
#include "maskopt/tensor.hpp"

namespace maskopt {

// The four mask games. Preservation and deletion start from a mask of ones,
// generation and repression from a mask of zeros. Deletion and repression
// maximize their objective, the other two minimize it.
enum class GameKind { preservation, deletion, generation, repression };

enum class Similarity { cross_entropy, negative_probability };

std::string_view to_string(GameKind game);
std::string_view to_string(Similarity sim);
GameKind parse_game_kind(std::string_view text);
Similarity parse_similarity(std::string_view text);

// True for deletion / repression (the objective is maximized).
bool removes_evidence(GameKind game);

// Cross-entropy for preservation / generation, negative probability for
// deletion / repression.
Similarity default_similarity(GameKind game);

struct Reference {
  enum class Kind { zero, gaussian_noise, blurred };
  Kind kind = Kind::zero;
  // gaussian_noise: stddev in raw 0-255 pixel units. blurred: blur stddev in
  // pixels.
  double sigma = 0.0;

  bool operator==(const Reference&) const = default;
};

std::string to_string(const Reference& ref);
Reference parse_reference(std::string_view text);

struct GameConfig {
  GameKind game = GameKind::deletion;
  // Most-likely class of the image when unset.
  std::optional<std::size_t> target_class;
  double lambda = 0.0;
  double learning_rate = 0.1;
  int iterations = 500;
  std::uint64_t seed = 0;
  // default_similarity(game) when unset.
  std::optional<Similarity> similarity;
  Reference reference;
  // Gradient filtering at clip sites. Only disabled for experiments.
  bool defended = true;

  Similarity effective_similarity() const { return similarity.value_or(default_similarity(game)); }
  bool operator==(const GameConfig&) const = default;
};

struct MaskState {
  Tensor mask;
  int iteration = 0;
  std::vector<double> loss_trace;
};

// Passed to the step hook after every optimizer update.
struct StepInfo {
  int iteration = 0;                      // updates completed so far
  const Tensor* mask = nullptr;           // mask after the update
  const Tensor* normalized_gradient = nullptr;
  double raw_gradient_max_abs = 0.0;      // before normalization
  const Tensor* scores = nullptr;         // softmax of the explanation before the update
  double loss = 0.0;
};

enum class StepAction { proceed, stop };
using StepHook = std::function<StepAction(const StepInfo&)>;

struct OptimizeOptions {
  // Overrides the reference built from GameConfig::reference.
  std::optional<Tensor> reference;
  // Converts raw-unit noise sigmas; identity when unset.
  std::optional<Normalization> normalization;
  StepHook hook;
};

struct ExplanationResult {
  GameKind game = GameKind::deletion;
  std::size_t target_class = 0;
  Tensor image;
  Tensor reference;
  Tensor mask;
  Tensor explanation;
  Tensor scores;  // softmax of the explanation
  double chosen_lambda = 0.0;
  double score_of_target = 0.0;
  int iterations = 0;
  bool converged = false;
};

// e = x * m + (1 - m) * r. Rejects masks outside [0, 1].
Tensor apply_mask(const Tensor& x, const Tensor& m, const Tensor& r);

// Probabilities are floored at this value before the logarithm.
inline constexpr double kCrossEntropyFloor = 1e-12;

double similarity_loss(const Tensor& scores, std::size_t target, Similarity kind);
// d similarity_loss / d scores.
Tensor similarity_gradient(const Tensor& scores, std::size_t target, Similarity kind);

// Value that the optimizer minimizes:
//   preservation / generation: sim + lambda * l1
//   deletion / repression:     -(sim + lambda * l1)
double game_objective(GameKind game, double sim, double mask_l1, double lambda);

// U(0.99, 1) for preservation / deletion, U(0, 0.01) otherwise.
MaskState init_mask(GameKind game, const Shape& shape, Rng& rng);

Tensor make_reference(const Tensor& x, const Reference& ref, const Normalization& norm, Rng& rng);

// Runs cfg.iterations SGD steps on the mask: forward the explanation, back-
// propagate the similarity gradient (filtered at clip sites when defended),
// chain through de/dm = x - r, add the sparsity gradient, normalize by the
// max-abs value, descend, clamp to [0, 1].
MaskState optimize_mask(const Network& net, const Tensor& x, const GameConfig& cfg,
                        const OptimizeOptions& opts = {});

// One optimization at cfg.lambda packaged as a result. `converged` reports
// whether the game's default stop criterion holds.
ExplanationResult explain(const Network& net, const Tensor& x, const GameConfig& cfg,
                          const OptimizeOptions& opts = {});

struct StopCriterion {
  enum class Kind {
    // preservation / generation: target is the most-likely class of e.
    // deletion / repression: the most-likely class of e is no longer the
    // target (score-drop rule when the target was not x's top class).
    game_default,
    // score_e[target] < fraction * score_x[target].
    score_drop,
  };
  Kind kind = Kind::game_default;
  double fraction = 0.02;
};

struct LineSearchOptions {
  std::vector<double> lambdas;
  StopCriterion criterion;
};

// 13 log-uniform values from 1e-4 down to 1e-10.
std::vector<double> default_lambda_schedule();
// 4 log-uniform values from 1e-7 down to 1e-10.
std::vector<double> deletion_metric_lambda_schedule();

LineSearchOptions default_line_search();
// Learning rate 0.3 is set by the caller; this provides the lambdas and the
// 2% score-drop criterion.
LineSearchOptions deletion_metric_line_search();

bool criterion_met(const ExplanationResult& result, const Tensor& image_scores,
                   const StopCriterion& criterion);

// Tries the lambdas in order (largest first) and returns the first result
// meeting the criterion; otherwise the last attempt with converged = false.
ExplanationResult line_search_lambda(const Network& net, const Tensor& x, const GameConfig& base,
                                     const LineSearchOptions& search = default_line_search(),
                                     const OptimizeOptions& opts = {});

enum class RenderKind { mask, complementary_mask, mean_mask, explanation, deletion_explanation };

std::string_view to_string(RenderKind kind);

// mask: m; complementary_mask: 1 - m; mean_mask: channel mean of m
// (preservation / generation) or 1 - m (deletion / repression), shape
// [1, H, W]; explanation: e; deletion_explanation: x * (1 - m), deletion /
// repression only.
Tensor render(const ExplanationResult& result, RenderKind kind);

}  // namespace maskopt
