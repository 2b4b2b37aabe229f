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
#include <string_view>
#include <utility>
#include <vector>

#include "maskopt/games.hpp"

namespace maskopt::io {

// Ordered key=value lines. Blank lines and lines starting with '#' are
// skipped; whitespace around keys and values is trimmed.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

// Shortest decimal that round-trips the double exactly.
std::string format_real(double v);

// Keys: game, target_class (auto | index), lambda, learning_rate,
// iterations, seed, similarity (auto | name), reference, defended
// (true | false). Missing keys keep their defaults; unknown or repeated
// keys are rejected.
GameConfig parse_run_config(std::string_view text);
std::string format_run_config(const GameConfig& cfg);

}  // namespace maskopt::io
