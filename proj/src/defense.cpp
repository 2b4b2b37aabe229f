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

#include "maskopt/defense.hpp"

#include <algorithm>
#include <numeric>

#include "maskopt/games.hpp"
#include "maskopt/parallel.hpp"

namespace maskopt {

std::size_t select_adversarial_class(const Tensor& scores, std::span<const std::size_t> excluded) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  auto admissible = [&](std::size_t c) {
    return std::find(excluded.begin(), excluded.end(), c) == excluded.end();
  };
  if (std::count_if(order.begin(), order.end(), admissible) < 2)
    throw ArgumentError("select_adversarial_class: need two classes outside the excluded set");
  return *std::find_if(order.begin(), order.end(), admissible);
}

std::size_t zero_image_class(const Network& net) {
  return forward(net, Tensor::zeros(net.input_shape())).predicted();
}

std::vector<std::size_t> eligible_images(const Network& net, const Dataset& data,
                                         double min_confidence, std::size_t jobs) {
  std::vector<char> keep(data.size(), 0);
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const Tensor scores = forward(net, data.images[i]).scores();
    keep[i] = scores[argmax(scores)] >= min_confidence;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

DefenseTrial run_defense_trial(const Network& net, const Tensor& x, std::size_t image_id,
                               std::size_t adversarial_class, bool defended,
                               const DefenseConfig& cfg) {
  GameConfig game;
  game.game = GameKind::generation;
  game.target_class = adversarial_class;
  game.lambda = 0.0;
  game.learning_rate = cfg.learning_rate;
  game.iterations = cfg.iterations;
  game.seed = Rng(cfg.seed).split(image_id * 1000 + adversarial_class).seed();
  game.defended = defended;

  DefenseTrial trial;
  trial.image_id = image_id;
  trial.adversarial_class = adversarial_class;
  trial.defended = defended;

  OptimizeOptions opts;
  opts.hook = [&](const StepInfo& step) {
    const double score = (*step.scores)[adversarial_class];
    trial.final_score = score;
    if (score > cfg.success_threshold) {
      trial.success = true;
      trial.iterations_used = step.iteration;
      return StepAction::stop;
    }
    return StepAction::proceed;
  };
  const MaskState state = optimize_mask(net, x, game, opts);
  if (!trial.success) {
    // The hook sees scores before each update; check the final mask too.
    const Tensor e = apply_mask(x, state.mask, Tensor::zeros(x.shape()));
    trial.final_score = forward(net, e).scores()[adversarial_class];
    trial.success = trial.final_score > cfg.success_threshold;
    trial.iterations_used = state.iteration;
  }
  return trial;
}

std::vector<DefenseTrial> run_defense_validation(const Network& net, const Dataset& data,
                                                 std::size_t count, bool defended,
                                                 const DefenseConfig& cfg) {
  std::vector<std::size_t> ids = eligible_images(net, data, cfg.min_confidence, cfg.jobs);
  const std::size_t available = ids.size();
  if (ids.size() > count) ids.resize(count);
  if (ids.empty())
    throw ArgumentError("empty eligible set: " + std::to_string(available) + " of " +
                        std::to_string(data.size()) + " images reach confidence " +
                        std::to_string(cfg.min_confidence) + ", " + std::to_string(count) +
                        " requested");
  const std::size_t zero_class[] = {zero_image_class(net)};

  std::vector<DefenseTrial> trials(ids.size());
  parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    const Tensor& x = data.images[ids[k]];
    const std::size_t target = select_adversarial_class(forward(net, x).scores(), zero_class);
    trials[k] = run_defense_trial(net, x, ids[k], target, defended, cfg);
  });
  return trials;
}

std::vector<DefenseTrial> run_blackimage_validation(const Network& net,
                                                    const Normalization& norm, bool defended,
                                                    const DefenseConfig& cfg) {
  const Tensor black = norm.black(net.input_shape());
  const std::size_t excluded[] = {forward(net, black).predicted(), zero_image_class(net)};
  std::vector<std::size_t> targets;
  for (std::size_t c = 0; c < net.num_classes(); ++c)
    if (c != excluded[0] && c != excluded[1]) targets.push_back(c);
  if (targets.empty()) throw ArgumentError("black-image validation: no admissible class");

  std::vector<DefenseTrial> trials(targets.size());
  parallel_for(targets.size(), cfg.jobs, [&](std::size_t k) {
    trials[k] = run_defense_trial(net, black, 0, targets[k], defended, cfg);
  });
  return trials;
}

double success_ratio(std::span<const DefenseTrial> trials) {
  if (trials.empty()) throw ArgumentError("success_ratio: no trials");
  const auto hits = std::count_if(trials.begin(), trials.end(),
                                  [](const DefenseTrial& t) { return t.success; });
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

void write_trials_csv(std::ostream& out, std::span<const DefenseTrial> trials) {
  out << "image_id,c_A,defended,success,final_score,iterations_used\n";
  for (const auto& t : trials)
    out << t.image_id << ',' << t.adversarial_class << ',' << (t.defended ? 1 : 0) << ','
        << (t.success ? 1 : 0) << ',' << t.final_score << ',' << t.iterations_used << '\n';
}

}  // namespace maskopt
