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

#include "maskopt/io/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "maskopt/error.hpp"

namespace maskopt::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError("run config: bad value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

GameConfig parse_run_config(std::string_view text) {
  GameConfig cfg;
  std::set<std::string> seen;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (!seen.insert(key).second) throw FormatError("run config: repeated key '" + key + "'");
    try {
      if (key == "game") {
        cfg.game = parse_game_kind(value);
      } else if (key == "target_class") {
        if (value == "auto") cfg.target_class.reset();
        else cfg.target_class = parse_number<std::size_t>(key, value);
      } else if (key == "lambda") {
        cfg.lambda = parse_number<double>(key, value);
      } else if (key == "learning_rate") {
        cfg.learning_rate = parse_number<double>(key, value);
      } else if (key == "iterations") {
        cfg.iterations = parse_number<int>(key, value);
        if (cfg.iterations < 0) throw ArgumentError("iterations must be >= 0");
      } else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(key, value);
      } else if (key == "similarity") {
        if (value == "auto") cfg.similarity.reset();
        else cfg.similarity = parse_similarity(value);
      } else if (key == "reference") {
        cfg.reference = parse_reference(value);
      } else if (key == "defended") {
        if (value != "true" && value != "false")
          throw FormatError("run config: defended must be true or false");
        cfg.defended = value == "true";
      } else {
        throw FormatError("run config: unknown key '" + key + "'");
      }
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("run config: ") + e.what());
    }
  }
  return cfg;
}

std::string format_run_config(const GameConfig& cfg) {
  KeyValues kv = {
      {"game", std::string(to_string(cfg.game))},
      {"target_class", cfg.target_class ? std::to_string(*cfg.target_class) : "auto"},
      {"lambda", format_real(cfg.lambda)},
      {"learning_rate", format_real(cfg.learning_rate)},
      {"iterations", std::to_string(cfg.iterations)},
      {"seed", std::to_string(cfg.seed)},
      {"similarity", cfg.similarity ? std::string(to_string(*cfg.similarity)) : "auto"},
      {"reference", to_string(cfg.reference)},
      {"defended", cfg.defended ? "true" : "false"},
  };
  return format_key_values(kv);
}

}  // namespace maskopt::io
