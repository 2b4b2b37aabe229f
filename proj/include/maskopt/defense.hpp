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
#include <ostream>
#include <span>
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/network.hpp"
#include "maskopt/tensor.hpp"

namespace maskopt {

// One adversarial generation attempt.
struct DefenseTrial {
  std::size_t image_id = 0;
  std::size_t adversarial_class = 0;
  bool defended = true;
  bool success = false;
  double final_score = 0.0;  // target score of the last explanation evaluated
  int iterations_used = 0;

  bool operator==(const DefenseTrial&) const = default;
};

struct DefenseConfig {
  // scores[c_A] above this at any iteration counts as a generated adversarial.
  double success_threshold = 0.9;
  // Only images whose top score reaches this are attacked.
  double min_confidence = 0.99;
  int iterations = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Least-likely class, or the second least-likely when the least-likely one
// is in `excluded`. Needs at least two classes outside `excluded`.
std::size_t select_adversarial_class(const Tensor& scores, std::span<const std::size_t> excluded);

// Predicted class of the all-zero (data-mean) input.
std::size_t zero_image_class(const Network& net);

// Indices of images whose top softmax score is >= min_confidence.
std::vector<std::size_t> eligible_images(const Network& net, const Dataset& data,
                                         double min_confidence, std::size_t jobs = 1);

// Generation game with lambda = 0 from x towards c_A; stops early on success.
DefenseTrial run_defense_trial(const Network& net, const Tensor& x, std::size_t image_id,
                               std::size_t adversarial_class, bool defended,
                               const DefenseConfig& cfg);

// Attacks the first `count` eligible images of `data` (normalized), each
// towards select_adversarial_class(scores, {zero-image class}).
std::vector<DefenseTrial> run_defense_validation(const Network& net, const Dataset& data,
                                                 std::size_t count, bool defended,
                                                 const DefenseConfig& cfg);

// Attacks the raw black image towards every class except the black image's
// prediction and the zero-image class. image_id is 0 for every trial.
std::vector<DefenseTrial> run_blackimage_validation(const Network& net,
                                                    const Normalization& norm, bool defended,
                                                    const DefenseConfig& cfg);

double success_ratio(std::span<const DefenseTrial> trials);

// Header: image_id,c_A,defended,success,final_score,iterations_used
void write_trials_csv(std::ostream& out, std::span<const DefenseTrial> trials);

}  // namespace maskopt
