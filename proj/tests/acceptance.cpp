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

// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "maskopt/dataset.hpp"
#include "maskopt/defense.hpp"
#include "maskopt/games.hpp"
#include "maskopt/gradcheck.hpp"
#include "maskopt/io/idx.hpp"
#include "maskopt/io/model_file.hpp"
#include "maskopt/io/netpbm.hpp"
#include "maskopt/metrics.hpp"
#include "maskopt/parallel.hpp"
#include "maskopt/trainer.hpp"

namespace fs = std::filesystem;
using namespace maskopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

template <typename Real>
bool bitwise_equal(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(Real)) == 0;
}

struct Fixture {
  io::ModelBundle model;
  Dataset test;  // normalized
  Dataset raw_test;

  static const Fixture& get() {
    static const Fixture f = [] {
      Fixture out{io::load_model(MASKOPT_FIXTURE_MODEL), {}, {}};
      out.raw_test = load_idx_split(MASKOPT_DATA_DIR, "test");
      out.test = out.raw_test.normalized(out.model.normalization);
      return out;
    }();
    return f;
  }
};

// ---------------------------------------------------------------------------

Outcome filter_rule() {
  const auto t0 = Clock::now();
  Rng rng(101);
  const std::size_t n = 100000;
  std::vector<float> g(n), h(n), bu(n), bl(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = static_cast<float>(rng.normal());
    // Small integer grid so that ties with the bounds occur often.
    h[i] = static_cast<float>(static_cast<int>(rng.below(7)) - 3) * 0.5f;
    const float a = static_cast<float>(static_cast<int>(rng.below(7)) - 3) * 0.5f;
    bu[i] = std::max(0.0f, a);
    bl[i] = std::min(0.0f, a);
    if (rng.below(4) == 0) h[i] = static_cast<float>(rng.normal());
  }
  std::vector<float> out = g;
  filter_gradient<float>(out, h, bu, bl);
  std::size_t mismatches = 0, passed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Product form, so a blocked negative gradient is -0.
    const float expect = g[i] * static_cast<float>(h[i] <= bu[i]) * static_cast<float>(h[i] >= bl[i]);
    passed += expect != 0.0f;
    mismatches += std::bit_cast<std::uint32_t>(expect) != std::bit_cast<std::uint32_t>(out[i]);
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 1.0,
          fmt("%zu tuples, %zu mismatches, %zu passed through, %.3f s (< 1 s)", n, mismatches,
              passed, t)};
}

Outcome forward_identity() {
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  const Network pooled = net.with_clip_policy(ClipPolicy::relu_and_maxpool);
  Rng rng(102);
  std::size_t differ = 0;
  for (int t = 0; t < 100; ++t) {
    Tensor x(net.input_shape());
    for (auto& v : x.values()) v = static_cast<float>(rng.normal());
    const Tensor plain = forward(net, x).scores();
    // Attach bounds from an unrelated image and run the filtered backward.
    const auto bounds = capture_bounds(net, f.test.images[static_cast<std::size_t>(t)]);
    const auto tape = forward(net, x);
    Tensor g(Shape{net.num_classes()});
    g[static_cast<std::size_t>(t) % net.num_classes()] = -1.0f;
    (void)backward_to_input(net, tape, g, &bounds);
    const auto pooled_bounds = capture_bounds(pooled, f.test.images[static_cast<std::size_t>(t)]);
    const auto pooled_tape = forward(pooled, x);
    (void)backward_to_input(pooled, pooled_tape, g, &pooled_bounds);
    differ += !bitwise_equal(plain, tape.scores()) || !bitwise_equal(plain, forward(net, x).scores()) ||
              !bitwise_equal(plain, pooled_tape.scores());
  }
  return {differ == 0, fmt("100 random inputs, %zu with differing scores", differ)};
}

Outcome selective_filtering() {
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Tensor& x = f.test.images[i];
    const auto tape = forward(net, x);
    const auto bounds = bounds_from_tape(net, tape);
    const Tensor g = similarity_gradient(tape.scores(), tape.predicted(), Similarity::cross_entropy);
    differ += !bitwise_equal(backward_to_input(net, tape, g), backward_to_input(net, tape, g, &bounds));
  }
  return {differ == 0, fmt("100 fixture images, %zu with differing input gradients", differ)};
}

Outcome autodiff() {
  const auto t0 = Clock::now();
  const auto& f = Fixture::get();
  const NetworkD net = f.model.network.cast<double>();
  Rng rng(104);
  double worst = 0.0;
  std::string parts;
  bool enough = true;
  // Input gradients exercise conv, relu, maxpool, linear and softmax.
  {
    GradientCheckReport total;
    // Flat backgrounds put many coordinates on max-pool ties, which are
    // excluded, so sample until enough remain.
    for (std::size_t i = 0; i < 50 && total.checked < 200; ++i) {
      const auto r = gradient_check(net, f.test.images[i].cast<double>(), 1e-4, rng, 64);
      total.checked += r.checked;
      total.excluded += r.excluded;
      total.max_relative_error = std::max(total.max_relative_error, r.max_relative_error);
    }
    worst = std::max(worst, total.max_relative_error);
    enough = enough && total.checked >= 100;
    parts += fmt("input %zu (%zu excluded) err %.2e", total.checked, total.excluded,
                 total.max_relative_error);
  }
  for (std::size_t layer = 0; layer < net.num_layers(); ++layer) {
    const auto kind = layer_kind(net.layers()[layer]);
    if (kind != LayerKind::conv2d && kind != LayerKind::linear) continue;
    GradientCheckReport total;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto r = param_gradient_check(net, f.test.images[i].cast<double>(), f.test.labels[i],
                                          layer, 1e-4, rng, 64);
      total.checked += r.checked;
      total.excluded += r.excluded;
      total.max_relative_error = std::max(total.max_relative_error, r.max_relative_error);
    }
    worst = std::max(worst, total.max_relative_error);
    enough = enough && total.checked >= 100;
    parts += fmt("; %s@%zu %zu err %.2e", layer_kind_name(kind), layer,
                 total.checked, total.max_relative_error);
  }
  const double t = seconds_since(t0);
  return {worst < 1e-3 && enough && t < 30.0,
          fmt("max rel err %.2e (< 1e-3), %.1f s (< 30 s): ", worst, t) + parts};
}

Outcome defense_validation() {
  const auto t0 = Clock::now();
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  const double acc = evaluate(net, f.test, jobs());
  DefenseConfig cfg;
  cfg.jobs = jobs();
  const auto undefended = run_defense_validation(net, f.test, 100, false, cfg);
  const auto defended = run_defense_validation(net, f.test, 100, true, cfg);
  const double u = success_ratio(undefended), d = success_ratio(defended);
  const double t = seconds_since(t0);
  return {acc >= 0.95 && undefended.size() == 100 && u >= 0.95 && d <= 0.02 && t < 900.0,
          fmt("accuracy %.3f (>= 0.95), %zu trials, undefended %.2f (>= 0.95), defended %.2f "
              "(<= 0.02), %.0f s (< 900 s)",
              acc, undefended.size(), u, d, t)};
}

Outcome black_image() {
  const auto t0 = Clock::now();
  const auto& f = Fixture::get();
  DefenseConfig cfg;
  cfg.jobs = jobs();
  const auto undefended = run_blackimage_validation(f.model.network, f.model.normalization, false, cfg);
  const auto defended = run_blackimage_validation(f.model.network, f.model.normalization, true, cfg);
  const double u = success_ratio(undefended), d = success_ratio(defended);
  const double t = seconds_since(t0);
  const std::size_t c = f.model.network.num_classes();
  return {undefended.size() == c - 2 && u >= 0.95 && d <= 0.02 && t < 300.0,
          fmt("%zu classes (C - 2 = %zu), undefended %.2f (>= 0.95), defended %.2f (<= 0.02), "
              "%.0f s (< 300 s)",
              undefended.size(), c - 2, u, d, t)};
}

// Trapezoid rule in long double, written independently of the library.
double trapezoid_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0.0L;
  for (std::size_t i = 1; i < x.size(); ++i)
    s += (static_cast<long double>(x[i]) - x[i - 1]) * (static_cast<long double>(y[i]) + y[i - 1]) / 2;
  return static_cast<double>(s);
}

Outcome deletion_machinery() {
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  const auto sched = deletion_schedule();
  const bool sched_ok = sched.size() == 176 && sched.back() == 1.0;
  Rng rng(107);
  double auc_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> y(sched.size());
    for (auto& v : y) v = rng.uniform01();
    auc_err = std::max(auc_err, std::abs(trapezoid_auc(sched, y) - trapezoid_oracle(sched, y)));
  }
  std::size_t f0_bad = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const Tensor& x = f.test.images[i];
    const Tensor s = forward(net, x).scores();
    const auto curve = deletion_curve(net, x, random_importance(x.dim(1), x.dim(2), rng));
    auc_err = std::max(auc_err, std::abs(curve.auc - trapezoid_oracle(curve.fractions, curve.probs)));
    f0_bad += curve.probs.front() != static_cast<double>(s[argmax(s)]);
  }
  return {sched_ok && auc_err <= 1e-12 && f0_bad == 0,
          fmt("schedule %zu points ending at %.17g, max AUC error %.2e (<= 1e-12), "
              "%zu of 10 fraction-0 scores differ",
              sched.size(), sched.back(), auc_err, f0_bad)};
}

Outcome faithfulness() {
  const auto t0 = Clock::now();
  const auto& f = Fixture::get();
  const auto& net = f.model.network;
  const std::size_t n = 100;
  std::vector<double> fg(n), rnd(n), grad(n);
  parallel_for(n, jobs(), [&](std::size_t i) {
    const Tensor& x = f.test.images[i];
    Rng rng = Rng(108).split(i);
    fg[i] = deletion_curve(net, x, deletion_game_importance(net, x, i)).auc;
    rnd[i] = deletion_curve(net, x, random_importance(x.dim(1), x.dim(2), rng)).auc;
    grad[i] = deletion_curve(net, x, gradient_importance(net, x)).auc;
  });
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
  };
  std::size_t wins = 0;
  for (std::size_t i = 0; i < n; ++i) wins += fg[i] < grad[i];
  const double t = seconds_since(t0);
  const double share = static_cast<double>(wins) / static_cast<double>(n);
  return {mean(fg) < mean(rnd) && share >= 0.6 && t < 1800.0,
          fmt("mean AUC fgvis %.4f < random %.4f, fgvis beats input-gradient (mean %.4f) on "
              "%.2f of images (>= 0.60), %.0f s (< 1800 s)",
              mean(fg), mean(rnd), mean(grad), share, t)};
}

Outcome entropy_check() {
  const auto& f = Fixture::get();
  const double uniform = entropy(Tensor({1000}, 1.0f / 1000.0f));
  const bool uniform_ok = std::round(uniform * 100.0) / 100.0 == 6.91;
  Tensor one_hot({10});
  one_hot[3] = 1.0f;
  const double oh = entropy(one_hot);
  Rng rng(109);
  const auto rows = reference_entropy_report(f.model.network, f.model.normalization, f.test, 100,
                                             rng, jobs());
  std::map<std::string, double> means;
  for (const auto& r : rows) means[r.reference] = r.mean;
  const double blurred = std::max(means.at("blurred:5"), means.at("blurred:10"));
  std::string note;
  if (means.at("zero") < blurred)
    note = " [note: zero-image entropy below the blurred references on this model]";
  return {uniform_ok && oh == 0.0,
          fmt("uniform(1000) %.4f -> %.2f (6.91), one-hot %.1f, zero image %.4f vs blurred "
              "%.4f / %.4f, maximum %.4f",
              uniform, std::round(uniform * 100.0) / 100.0, oh, means.at("zero"),
              means.at("blurred:5"), means.at("blurred:10"), means.at("maximum")) +
              note};
}

// 3-channel copy of the fixture model whose first convolution sees the
// channel mean, so it cannot tell channels apart.
Network channel_symmetric(const Network& grey) {
  Network net = make_fixture_network({3, 28, 28}, grey.num_classes());
  for (std::size_t i = 1; i < grey.num_layers(); ++i) net.layer(i) = grey.layers()[i];
  const auto& g = std::get<Conv2d<float>>(grey.layers()[0]);
  auto& c = std::get<Conv2d<float>>(net.layer(0));
  const std::size_t taps = g.kernel * g.kernel;
  for (std::size_t o = 0; o < c.out_channels; ++o)
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t k = 0; k < taps; ++k)
        c.weight[(o * 3 + ch) * taps + k] = g.weight[o * taps + k] / 3.0f;
  c.bias = g.bias;
  return net;
}

Outcome color_machinery() {
  const auto& f = Fixture::get();
  const Network net = channel_symmetric(f.model.network);
  const float m = f.model.normalization.mean[0], s = f.model.normalization.stddev[0];
  const Normalization norm{{m, m, m}, {s, s, s}};
  const Dataset colour = colorize(f.raw_test, 7).normalized(norm);
  std::size_t logits_differ = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Tensor& x = colour.images[i];
    const Tensor base = forward(net, x).logits();
    for (auto p : {ColorPerm::rbg, ColorPerm::grb})
      logits_differ += !bitwise_equal(base, forward(net, color_swap(color_swap(x, p), inverse(p))).logits());
  }
  std::size_t not_one = 0;
  std::string ratios;
  for (std::size_t c = 0; c < net.num_classes(); ++c) {
    const auto row = color_bias_ratio(net, colour, c, jobs());
    not_one += !(row.average && *row.average == 1.0);
    ratios += fmt(" %zu:%s", c, row.average ? fmt("%.3f", *row.average).c_str() : "nan");
  }
  return {logits_differ == 0 && not_one == 0,
          fmt("%zu of 200 swap/unswap logits differ; symmetric-model ratios", logits_differ) + ratios};
}

Outcome mask_domain() {
  const auto& f = Fixture::get();
  std::size_t runs = 0, out_of_range = 0, bad_norm = 0, steps = 0;
  for (auto game : {GameKind::preservation, GameKind::deletion, GameKind::generation, GameKind::repression}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      GameConfig cfg;
      cfg.game = game;
      cfg.seed = seed;
      cfg.lambda = 1e-5;
      OptimizeOptions opts;
      opts.hook = [&](const StepInfo& s) {
        ++steps;
        for (float v : s.mask->values()) out_of_range += !(v >= 0.0f && v <= 1.0f);
        if (s.raw_gradient_max_abs > 0.0)
          bad_norm += reduce(*s.normalized_gradient, Reduction::max_abs) != 1.0f;
        return StepAction::proceed;
      };
      optimize_mask(f.model.network, f.test.images[runs], cfg, opts);
      ++runs;
    }
  }
  return {runs == 20 && out_of_range == 0 && bad_norm == 0,
          fmt("%zu runs, %zu steps, %zu mask elements outside [0, 1], %zu normalized gradients "
              "with max_abs != 1",
              runs, steps, out_of_range, bad_norm)};
}

std::map<std::string, std::vector<std::uint8_t>> read_tree(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  return out;
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "maskopt_acceptance_repro";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::vector<std::uint8_t>>> trees;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + MASKOPT_CLI + "\" explain --model \"" +
                            MASKOPT_FIXTURE_MODEL + "\" --data \"" + MASKOPT_DATA_DIR +
                            "\" --index 3 --game deletion --line-search --seed 11 --out-dir \"" +
                            (root / run).string() + "\" >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "explain exited with an error"};
    trees.push_back(read_tree(root / run));
  }
  fs::remove_all(root);
  return {!trees[0].empty() && trees[0] == trees[1],
          fmt("%zu files per run, identical: %s", trees[0].size(),
              trees[0] == trees[1] ? "yes" : "no")};
}

// Minimal IDX image reader: big-endian header, then raw bytes.
struct MinimalIdx {
  std::uint32_t count = 0, rows = 0, cols = 0;
  std::uint64_t first_sum = 0;
};

MinimalIdx read_minimal_idx(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto be = [&](std::size_t o) {
    return (std::uint32_t{b[o]} << 24) | (std::uint32_t{b[o + 1]} << 16) |
           (std::uint32_t{b[o + 2]} << 8) | std::uint32_t{b[o + 3]};
  };
  MinimalIdx m{be(4), be(8), be(12), 0};
  for (std::size_t i = 0; i < std::size_t{m.rows} * m.cols; ++i) m.first_sum += b[16 + i];
  return m;
}

Outcome format_roundtrips() {
  const auto model_bytes = io::read_file(MASKOPT_FIXTURE_MODEL);
  const auto decoded = io::decode_model(model_bytes);
  const bool model_ok = io::encode_model(decoded.network, decoded.normalization) == model_bytes;

  Rng rng(113);
  bool images_ok = true;
  for (std::size_t channels : {std::size_t{1}, std::size_t{3}}) {
    for (int t = 0; t < 20; ++t) {
      Tensor img({channels, 1 + rng.below(20), 1 + rng.below(20)});
      for (auto& v : img.values()) v = static_cast<float>(rng.below(256)) / 255.0f;
      const auto bytes = io::encode_netpbm(img);
      const Tensor back = io::decode_netpbm(bytes);
      images_ok = images_ok && bitwise_equal(back, img) && io::encode_netpbm(back) == bytes;
    }
  }

  const fs::path images = fs::path(MASKOPT_DATA_DIR) / "test-images-idx3-ubyte";
  const MinimalIdx ref = read_minimal_idx(images);
  const auto parsed = io::idx_images(io::parse_idx(io::read_file(images)));
  std::uint64_t sum = 0;
  for (float v : parsed.at(0).values()) sum += static_cast<std::uint64_t>(v);
  const bool idx_ok = parsed.size() == ref.count && parsed[0].shape() == Shape{1, ref.rows, ref.cols} &&
                      sum == ref.first_sum;
  return {model_ok && images_ok && idx_ok,
          fmt("model file %s, netpbm %s, idx %zu images [%ux%u] first-image sum %llu vs %llu",
              model_ok ? "bitwise" : "DIFFERS", images_ok ? "bitwise" : "DIFFERS", parsed.size(),
              ref.rows, ref.cols, static_cast<unsigned long long>(sum),
              static_cast<unsigned long long>(ref.first_sum))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient filter rule", filter_rule},
      {"clip-site forward identity", forward_identity},
      {"selective filtering at e = x", selective_filtering},
      {"autodiff vs finite differences", autodiff},
      {"defense validation", defense_validation},
      {"black-image validation", black_image},
      {"deletion metric machinery", deletion_machinery},
      {"faithfulness direction", faithfulness},
      {"entropy", entropy_check},
      {"colour machinery", color_machinery},
      {"mask-domain invariant", mask_domain},
      {"reproducibility", reproducibility},
      {"format round trips", format_roundtrips},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
