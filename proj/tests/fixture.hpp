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

#include <string>

#include "maskopt/dataset.hpp"
#include "maskopt/io/model_file.hpp"

namespace maskopt::testing {

// Trained model and normalized test split shared by the fixture tests.
struct Fixture {
  io::ModelBundle model;
  Dataset test;

  static const Fixture& get() {
    static const Fixture f = [] {
      Fixture out{io::load_model(MASKOPT_FIXTURE_MODEL), {}};
      out.test = load_idx_split(MASKOPT_DATA_DIR, "test").normalized(out.model.normalization);
      return out;
    }();
    return f;
  }
};

}  // namespace maskopt::testing
