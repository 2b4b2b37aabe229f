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

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fixture.hpp"
#include "maskopt/defense.hpp"
#include "maskopt/games.hpp"
#include "maskopt/trainer.hpp"

using namespace maskopt;
using maskopt::testing::Fixture;

namespace {

std::vector<std::size_t> first_eligible(std::size_t n) {
  const auto& f = Fixture::get();
  auto ids = eligible_images(f.model.network, f.test, 0.99);
  REQUIRE(ids.size() >= n);
  ids.resize(n);
  return ids;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("fixture model reaches the target accuracy") {
  const auto& f = Fixture::get();
  CHECK(evaluate(f.model.network, f.test) >= 0.95);
}

TEST_CASE("per-epoch training loss does not increase over the first three epochs") {
  std::ifstream in(std::string(MASKOPT_FIXTURE_MODEL) + ".log.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,loss,accuracy");
  std::vector<double> losses;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string epoch, loss;
    std::getline(row, epoch, ',');
    std::getline(row, loss, ',');
    losses.push_back(std::stod(loss));
  }
  REQUIRE(losses.size() >= 3);
  CHECK(losses[1] <= losses[0]);
  CHECK(losses[2] <= losses[1]);
}

TEST_CASE("line-searched deletion shifts the predicted class") {
  const auto& f = Fixture::get();
  for (std::size_t id : first_eligible(5)) {
    const Tensor& x = f.test.images[id];
    GameConfig cfg;
    cfg.game = GameKind::deletion;
    cfg.seed = id;
    const auto res = line_search_lambda(f.model.network, x, cfg);
    CHECK(res.converged);
    CHECK(argmax(res.scores) != argmax(forward(f.model.network, x).scores()));
  }
}

TEST_CASE("line-searched deletion removes at most 20% of the median image") {
  const auto& f = Fixture::get();
  std::vector<double> removed;
  for (std::size_t id = 0; id < 21; ++id) {
    GameConfig cfg;
    cfg.game = GameKind::deletion;
    cfg.seed = id;
    const auto res = line_search_lambda(f.model.network, f.test.images[id], cfg);
    const Tensor comp = render(res, RenderKind::complementary_mask);
    removed.push_back(reduce(comp, Reduction::sum) / static_cast<double>(comp.size()));
  }
  MESSAGE("median removed mass " << median(removed));
  CHECK(median(removed) <= 0.2);
}

TEST_CASE("stat: preservation loss rarely increases over 50-step windows") {
  const auto& f = Fixture::get();
  int monotone = 0;
  for (std::size_t run = 0; run < 20; ++run) {
    GameConfig cfg;
    cfg.game = GameKind::preservation;
    cfg.seed = run;
    const MaskState st = optimize_mask(f.model.network, f.test.images[run], cfg);
    bool ok = true;
    for (std::size_t t = 0; t + 50 < st.loss_trace.size(); ++t)
      ok = ok && st.loss_trace[t + 50] <= st.loss_trace[t];
    monotone += ok;
  }
  MESSAGE(monotone << " of 20 runs non-increasing");
  CHECK(monotone >= 18);
}

TEST_CASE("stat: undefended generation raises the adversarial score over the first ten steps") {
  const auto& f = Fixture::get();
  const std::size_t zero_class = zero_image_class(f.model.network);
  const std::vector<std::size_t> excluded = {zero_class};
  int increasing = 0, net_gain = 0;
  const auto ids = first_eligible(20);
  for (std::size_t id : ids) {
    const Tensor& x = f.test.images[id];
    GameConfig cfg;
    cfg.game = GameKind::generation;
    cfg.defended = false;
    cfg.iterations = 11;
    cfg.seed = id;
    cfg.target_class = select_adversarial_class(forward(f.model.network, x).scores(), excluded);
    std::vector<double> trace;
    OptimizeOptions opts;
    opts.hook = [&](const StepInfo& s) {
      trace.push_back((*s.scores)[*cfg.target_class]);
      return StepAction::proceed;
    };
    optimize_mask(f.model.network, x, cfg, opts);
    net_gain += trace.back() > trace.front();
    increasing += std::adjacent_find(trace.begin(), trace.end(), std::greater_equal<>()) == trace.end();
  }
  MESSAGE(increasing << " of " << ids.size() << " trials strictly increasing, " << net_gain
                      << " with a net gain");
  CHECK(increasing >= 18);
}

TEST_CASE("defense validation is reproducible") {
  const auto& f = Fixture::get();
  DefenseConfig cfg;
  cfg.iterations = 50;
  cfg.seed = 3;
  const auto a = run_defense_validation(f.model.network, f.test, 4, false, cfg);
  cfg.jobs = 2;
  const auto b = run_defense_validation(f.model.network, f.test, 4, false, cfg);
  CHECK(a == b);
  CHECK(success_ratio(a) == success_ratio(b));
}

// Fraction of clip-site neurons of e whose activation stays inside the bounds
// captured from x, with a 1e-4 tolerance.
TEST_CASE("stat: defended explanations stay within the activation bounds of x") {
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  std::size_t inside = 0, total = 0;
  double worst = 1.0;
  for (auto game : {GameKind::preservation, GameKind::deletion, GameKind::generation, GameKind::repression}) {
    for (std::size_t id = 0; id < 5; ++id) {
      const Tensor& x = f.test.images[id];
      GameConfig cfg;
      cfg.game = game;
      cfg.seed = id;
      cfg.lambda = 1e-6;
      const auto res = explain(net, x, cfg);
      const auto bounds = capture_bounds(net, x);
      const auto tape = forward(net, res.explanation);
      std::size_t in_run = 0, n_run = 0;
      for (const auto& site : bounds.sites) {
        const Tensor& h = tape.outputs[site.layer];
        for (std::size_t i = 0; i < h.size(); ++i) {
          in_run += h[i] >= site.lower[i] - 1e-4f && h[i] <= site.upper[i] + 1e-4f;
          ++n_run;
        }
      }
      inside += in_run;
      total += n_run;
      worst = std::min(worst, static_cast<double>(in_run) / static_cast<double>(n_run));
    }
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(total);
  MESSAGE("within bounds: overall " << frac << ", worst run " << worst);
  CHECK(frac >= 0.99);
}
