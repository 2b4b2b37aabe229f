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

#include <cstddef>
#include <optional>

#include "maskopt/network.hpp"
#include "maskopt/rng.hpp"

namespace maskopt {

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +/- eps probe crosses a ReLU kink or flips a max-pool
  // selection; the loss is not differentiable there.
  std::size_t excluded = 0;
};

// Relative error used throughout: |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

// Compares backward_to_input (no bounds) against central differences of
// scores[class] over `samples` random input coordinates (all of them when the
// input is smaller). The class defaults to the predicted one.
GradientCheckReport gradient_check(const NetworkD& net, const TensorD& input, double eps,
                                   Rng& rng, std::size_t samples = 128,
                                   std::optional<std::size_t> class_index = std::nullopt);

// Same comparison for the weights of layer `layer` under the cross-entropy
// loss -log scores[label].
GradientCheckReport param_gradient_check(const NetworkD& net, const TensorD& input,
                                         std::size_t label, std::size_t layer, double eps,
                                         Rng& rng, std::size_t samples = 128);

}  // namespace maskopt
