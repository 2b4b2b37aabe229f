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

#include "maskopt/games.hpp"

#include <charconv>
#include <cmath>

#include "maskopt/image_ops.hpp"

namespace maskopt {

std::string_view to_string(GameKind game) {
  switch (game) {
    case GameKind::preservation: return "preservation";
    case GameKind::deletion: return "deletion";
    case GameKind::generation: return "generation";
    case GameKind::repression: return "repression";
  }
  return "?";
}

std::string_view to_string(Similarity sim) {
  return sim == Similarity::cross_entropy ? "cross_entropy" : "negative_probability";
}

GameKind parse_game_kind(std::string_view text) {
  for (auto g : {GameKind::preservation, GameKind::deletion, GameKind::generation,
                 GameKind::repression})
    if (text == to_string(g)) return g;
  throw ArgumentError("unknown game '" + std::string(text) + "'");
}

Similarity parse_similarity(std::string_view text) {
  for (auto s : {Similarity::cross_entropy, Similarity::negative_probability})
    if (text == to_string(s)) return s;
  throw ArgumentError("unknown similarity '" + std::string(text) + "'");
}

bool removes_evidence(GameKind game) {
  return game == GameKind::deletion || game == GameKind::repression;
}

Similarity default_similarity(GameKind game) {
  return removes_evidence(game) ? Similarity::negative_probability : Similarity::cross_entropy;
}

std::string to_string(const Reference& ref) {
  char buf[64];
  const auto end = std::to_chars(buf, buf + sizeof buf, ref.sigma).ptr;
  const std::string sigma(buf, end);
  switch (ref.kind) {
    case Reference::Kind::zero: return "zero";
    case Reference::Kind::gaussian_noise: return "gaussian_noise:" + sigma;
    case Reference::Kind::blurred: return "blurred:" + sigma;
  }
  return "zero";
}

Reference parse_reference(std::string_view text) {
  if (text == "zero") return {};
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ArgumentError("reference must be zero, gaussian_noise:<sigma> or blurred:<sigma>");
  const std::string_view kind = text.substr(0, colon);
  const std::string sigma_text(text.substr(colon + 1));
  std::size_t used = 0;
  double sigma = 0.0;
  try {
    sigma = std::stod(sigma_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != sigma_text.size() || sigma_text.empty() || !(sigma > 0.0))
    throw ArgumentError("reference sigma must be a positive number: '" + sigma_text + "'");
  if (kind == "gaussian_noise") return {Reference::Kind::gaussian_noise, sigma};
  if (kind == "blurred") return {Reference::Kind::blurred, sigma};
  throw ArgumentError("unknown reference kind '" + std::string(kind) + "'");
}

Tensor apply_mask(const Tensor& x, const Tensor& m, const Tensor& r) {
  require_same_shape(x, m, "apply_mask");
  require_same_shape(x, r, "apply_mask");
  Tensor e(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float mi = m[i];
    if (!(mi >= 0.0f && mi <= 1.0f)) throw ArgumentError("apply_mask: mask value outside [0, 1]");
    e[i] = x[i] * mi + (1.0f - mi) * r[i];
  }
  return e;
}

double similarity_loss(const Tensor& scores, std::size_t target, Similarity kind) {
  if (target >= scores.size()) throw ArgumentError("similarity_loss: target out of range");
  const double p = scores[target];
  if (kind == Similarity::cross_entropy) return -std::log(std::max(p, kCrossEntropyFloor));
  return -p;
}

Tensor similarity_gradient(const Tensor& scores, std::size_t target, Similarity kind) {
  if (target >= scores.size()) throw ArgumentError("similarity_gradient: target out of range");
  Tensor g(scores.shape());
  if (kind == Similarity::cross_entropy)
    g[target] = static_cast<float>(-1.0 / std::max(static_cast<double>(scores[target]),
                                                   kCrossEntropyFloor));
  else
    g[target] = -1.0f;
  return g;
}

double game_objective(GameKind game, double sim, double mask_l1, double lambda) {
  if (lambda < 0.0) throw ArgumentError("game_objective: lambda must be >= 0");
  const double value = sim + lambda * mask_l1;
  return removes_evidence(game) ? -value : value;
}

MaskState init_mask(GameKind game, const Shape& shape, Rng& rng) {
  MaskState state;
  state.mask = game == GameKind::preservation || game == GameKind::deletion
                   ? uniform_noise<float>(shape, 0.99, 1.0, rng)
                   : uniform_noise<float>(shape, 0.0, 0.01, rng);
  return state;
}

Tensor make_reference(const Tensor& x, const Reference& ref, const Normalization& norm, Rng& rng) {
  switch (ref.kind) {
    case Reference::Kind::zero:
      return Tensor::zeros(x.shape());
    case Reference::Kind::gaussian_noise: {
      // Zero-mean noise in raw pixel units, expressed in normalized units.
      Tensor noise = gaussian_noise<float>(x.shape(), 1.0, rng);
      const std::size_t plane = x.dim(1) * x.dim(2);
      for (std::size_t c = 0; c < x.dim(0); ++c) {
        const double scale = ref.sigma / 255.0 / norm.stddev.at(c);
        for (std::size_t i = 0; i < plane; ++i)
          noise[c * plane + i] = static_cast<float>(noise[c * plane + i] * scale);
      }
      return noise;
    }
    case Reference::Kind::blurred:
      return gaussian_blur(x, ref.sigma);
  }
  return Tensor::zeros(x.shape());
}

namespace {

struct Prepared {
  std::size_t target = 0;
  Tensor reference;
  Tensor image_scores;
};

Prepared prepare(const Network& net, const Tensor& x, const GameConfig& cfg,
                 const OptimizeOptions& opts) {
  if (x.shape() != net.input_shape())
    throw ShapeError("optimize_mask: image shape " + shape_string(x.shape()) +
                     " does not match network input " + shape_string(net.input_shape()));
  if (!(cfg.learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (cfg.iterations < 0) throw ArgumentError("iterations must be >= 0");
  if (cfg.lambda < 0.0) throw ArgumentError("lambda must be >= 0");
  Prepared p;
  p.image_scores = forward(net, x).scores();
  p.target = cfg.target_class.value_or(argmax(p.image_scores));
  if (p.target >= net.num_classes())
    throw ArgumentError("target class " + std::to_string(p.target) + " out of range");
  if (opts.reference) {
    require_same_shape(x, *opts.reference, "optimize_mask reference");
    p.reference = *opts.reference;
  } else {
    Rng ref_rng = Rng(cfg.seed).split(1);
    p.reference = make_reference(
        x, cfg.reference, opts.normalization.value_or(Normalization::identity(x.dim(0))), ref_rng);
  }
  return p;
}

MaskState run_game(const Network& net, const Tensor& x, const GameConfig& cfg,
                   const Prepared& prep, const StepHook& hook) {
  Rng rng(cfg.seed);
  MaskState state = init_mask(cfg.game, x.shape(), rng);
  const Similarity sim_kind = cfg.effective_similarity();
  const bool removal = removes_evidence(cfg.game);
  const float sparsity = static_cast<float>(removal ? -cfg.lambda : cfg.lambda);
  const float lr = static_cast<float>(cfg.learning_rate);

  std::optional<ActivationBounds<float>> bounds;
  if (cfg.defended) bounds = capture_bounds(net, x);

  const Tensor& r = prep.reference;
  Tensor x_minus_r = map_zip(x, r, [](float a, float b) { return a - b; });
  state.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int it = 0; it < cfg.iterations; ++it) {
    const Tensor e = apply_mask(x, state.mask, r);
    const auto tape = forward(net, e);
    const Tensor& scores = tape.scores();
    const double sim = similarity_loss(scores, prep.target, sim_kind);
    const double l1 = reduce(state.mask, Reduction::sum);
    const double loss = game_objective(cfg.game, sim, l1, cfg.lambda);
    if (!std::isfinite(loss))
      throw DivergenceError("mask optimization diverged at iteration " + std::to_string(it) +
                            " (loss " + std::to_string(loss) + ")");
    state.loss_trace.push_back(loss);

    Tensor grad_scores = similarity_gradient(scores, prep.target, sim_kind);
    if (removal)
      for (auto& g : grad_scores.values()) g = -g;
    const Tensor grad_e =
        backward_to_input(net, tape, grad_scores, bounds ? &*bounds : nullptr);

    // Sparsity gradient is added here, outside the network, so it is never
    // filtered.
    Tensor grad_m(x.shape());
    for (std::size_t i = 0; i < grad_m.size(); ++i)
      grad_m[i] = grad_e[i] * x_minus_r[i] + sparsity;
    const float peak = reduce(grad_m, Reduction::max_abs);
    if (!std::isfinite(peak))
      throw DivergenceError("non-finite mask gradient at iteration " + std::to_string(it));
    if (peak > 0.0f)
      for (auto& g : grad_m.values()) g /= peak;

    for (std::size_t i = 0; i < grad_m.size(); ++i)
      state.mask[i] = std::clamp(state.mask[i] - lr * grad_m[i], 0.0f, 1.0f);
    state.iteration = it + 1;

    if (hook) {
      StepInfo info;
      info.iteration = state.iteration;
      info.mask = &state.mask;
      info.normalized_gradient = &grad_m;
      info.raw_gradient_max_abs = peak;
      info.scores = &scores;
      info.loss = loss;
      if (hook(info) == StepAction::stop) break;
    }
  }
  return state;
}

ExplanationResult finalize(const Network& net, const Tensor& x, const GameConfig& cfg,
                           const Prepared& prep, MaskState state) {
  ExplanationResult res;
  res.game = cfg.game;
  res.target_class = prep.target;
  res.image = x;
  res.reference = prep.reference;
  res.mask = std::move(state.mask);
  res.explanation = apply_mask(x, res.mask, prep.reference);
  res.scores = forward(net, res.explanation).scores();
  res.chosen_lambda = cfg.lambda;
  res.score_of_target = res.scores[prep.target];
  res.iterations = state.iteration;
  return res;
}

}  // namespace

MaskState optimize_mask(const Network& net, const Tensor& x, const GameConfig& cfg,
                        const OptimizeOptions& opts) {
  const Prepared prep = prepare(net, x, cfg, opts);
  return run_game(net, x, cfg, prep, opts.hook);
}

ExplanationResult explain(const Network& net, const Tensor& x, const GameConfig& cfg,
                          const OptimizeOptions& opts) {
  const Prepared prep = prepare(net, x, cfg, opts);
  ExplanationResult res = finalize(net, x, cfg, prep, run_game(net, x, cfg, prep, opts.hook));
  res.converged = criterion_met(res, prep.image_scores, StopCriterion{});
  return res;
}

std::vector<double> default_lambda_schedule() {
  std::vector<double> out;
  for (int k = 0; k < 13; ++k) out.push_back(std::pow(10.0, -4.0 - 0.5 * k));
  return out;
}

std::vector<double> deletion_metric_lambda_schedule() {
  std::vector<double> out;
  for (int k = 0; k < 4; ++k) out.push_back(std::pow(10.0, -7.0 - k));
  return out;
}

LineSearchOptions default_line_search() {
  return {default_lambda_schedule(), StopCriterion{}};
}

LineSearchOptions deletion_metric_line_search() {
  return {deletion_metric_lambda_schedule(), StopCriterion{StopCriterion::Kind::score_drop, 0.02}};
}

bool criterion_met(const ExplanationResult& result, const Tensor& image_scores,
                   const StopCriterion& criterion) {
  const std::size_t t = result.target_class;
  const bool dropped = result.scores[t] < criterion.fraction * image_scores[t];
  if (criterion.kind == StopCriterion::Kind::score_drop) return dropped;
  const std::size_t predicted = argmax(result.scores);
  if (!removes_evidence(result.game)) return predicted == t;
  // A target that was not x's top class is already "not predicted" at the
  // start, so the class-shift rule would be vacuous; use the score drop.
  if (argmax(image_scores) != t) return dropped;
  return predicted != t;
}

ExplanationResult line_search_lambda(const Network& net, const Tensor& x, const GameConfig& base,
                                     const LineSearchOptions& search,
                                     const OptimizeOptions& opts) {
  if (search.lambdas.empty()) throw ArgumentError("line search needs at least one lambda");
  const Prepared prep = prepare(net, x, base, opts);
  ExplanationResult last;
  for (double lambda : search.lambdas) {
    GameConfig cfg = base;
    cfg.lambda = lambda;
    cfg.target_class = prep.target;
    last = finalize(net, x, cfg, prep, run_game(net, x, cfg, prep, opts.hook));
    if (criterion_met(last, prep.image_scores, search.criterion)) {
      last.converged = true;
      return last;
    }
  }
  last.converged = false;
  return last;
}

std::string_view to_string(RenderKind kind) {
  switch (kind) {
    case RenderKind::mask: return "mask";
    case RenderKind::complementary_mask: return "complementary_mask";
    case RenderKind::mean_mask: return "mean_mask";
    case RenderKind::explanation: return "explanation";
    case RenderKind::deletion_explanation: return "deletion_explanation";
  }
  return "?";
}

Tensor render(const ExplanationResult& result, RenderKind kind) {
  const Tensor& m = result.mask;
  auto complement = [&] { return map(m, [](float v) { return 1.0f - v; }); };
  switch (kind) {
    case RenderKind::mask:
      return m;
    case RenderKind::complementary_mask:
      return complement();
    case RenderKind::mean_mask: {
      const Tensor src = removes_evidence(result.game) ? complement() : m;
      const std::size_t channels = src.dim(0), plane = src.dim(1) * src.dim(2);
      Tensor out({1, src.dim(1), src.dim(2)});
      for (std::size_t p = 0; p < plane; ++p) {
        float acc = 0.0f;
        for (std::size_t c = 0; c < channels; ++c) acc += src[c * plane + p];
        out[p] = channels == 1 ? acc : acc / static_cast<float>(channels);
      }
      return out;
    }
    case RenderKind::explanation:
      return result.explanation;
    case RenderKind::deletion_explanation: {
      if (!removes_evidence(result.game))
        throw ArgumentError("deletion_explanation needs a deletion or repression result");
      return map_zip(result.image, m, [](float x, float mi) { return x * (1.0f - mi); });
    }
  }
  throw ArgumentError("unknown render kind");
}

}  // namespace maskopt
