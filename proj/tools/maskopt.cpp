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

// maskopt: train the fixture classifier, explain its predictions with mask
// games, and run the evaluation harnesses.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "maskopt/dataset.hpp"
#include "maskopt/defense.hpp"
#include "maskopt/games.hpp"
#include "maskopt/io/idx.hpp"
#include "maskopt/io/model_file.hpp"
#include "maskopt/io/netpbm.hpp"
#include "maskopt/io/run_config.hpp"
#include "maskopt/metrics.hpp"
#include "maskopt/parallel.hpp"
#include "maskopt/trainer.hpp"

namespace fs = std::filesystem;
using namespace maskopt;

namespace {

constexpr std::uint64_t kDefaultColorSeed = 7;

void log(const std::string& msg) { std::cerr << "maskopt: " << msg << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

// Loads a split and matches it to the model: grey digits are tinted when the
// model expects three channels.
Dataset load_split_for(const fs::path& dir, const std::string& split, std::size_t channels,
                       std::uint64_t color_seed) {
  Dataset data = load_idx_split(dir, split.c_str());
  if (channels == 3) return colorize(data, color_seed);
  if (channels != 1)
    throw ArgumentError("models with " + std::to_string(channels) + " input channels are unsupported");
  return data;
}

struct DataArgs {
  std::string dir = "data/digits";
  std::string split = "test";
  std::uint64_t color_seed = kDefaultColorSeed;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", dir, "IDX dataset directory")->capture_default_str();
    cmd->add_option("--split", split, "dataset split (train or test)")->capture_default_str();
    cmd->add_option("--color-seed", color_seed, "tint jitter seed for 3-channel models")
        ->capture_default_str();
  }
};

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  DataArgs data;
  std::string out;
  std::string log_csv;
  TrainConfig cfg;
  std::size_t width1 = 16;
  std::size_t width2 = 32;
  bool color = false;
  std::size_t jobs = 1;
};

int run_train(const TrainArgs& a) {
  Dataset train_split = load_idx_split(a.data.dir, "train");
  Dataset test_split = load_idx_split(a.data.dir, "test");
  if (a.color) {
    train_split = colorize(train_split, a.data.color_seed);
    test_split = colorize(test_split, a.data.color_seed + 1);
  }
  const Normalization norm = Normalization::fit(train_split.images);
  const Network arch = make_fixture_network(train_split.image_shape(), train_split.num_classes,
                                            a.width1, a.width2);
  log("training on " + std::to_string(train_split.size()) + " images, testing on " +
      std::to_string(test_split.size()));
  const TrainResult res =
      train(train_split.normalized(norm), test_split.normalized(norm), arch, a.cfg, a.jobs);
  if (const fs::path dir = fs::path(a.out).parent_path(); !dir.empty()) fs::create_directories(dir);
  io::save_model(a.out, res.network, norm);

  std::ostringstream csv;
  csv << "epoch,loss,accuracy\n";
  for (const auto& e : res.log)
    csv << e.epoch << ',' << io::format_real(e.mean_loss) << ',' << io::format_real(e.test_accuracy)
        << '\n';
  write_text(a.log_csv.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log_csv), csv.str());

  std::cout << "accuracy=" << io::format_real(res.accuracy) << '\n';
  if (res.below_target)
    log("warning: test accuracy " + std::to_string(res.accuracy) + " is below the target " +
        std::to_string(a.cfg.target_accuracy));
  return 0;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::string model;
  std::string image;
  DataArgs data;
  std::size_t index = 0;
  std::string config;
  std::string game = "deletion";
  std::string target = "auto";
  double lambda = 0.0;
  bool line_search = false;
  double lr = 0.1;
  int iters = 500;
  std::uint64_t seed = 0;
  bool no_defense = false;
  std::string similarity = "auto";
  std::string reference = "zero";
  std::string out_dir;
};

void write_image(const fs::path& path_stem, const Tensor& unit) {
  const Tensor clipped = clamp01(unit);
  const auto bytes = io::encode_netpbm(clipped);
  io::write_file(path_stem.string() + (unit.dim(0) == 3 ? ".ppm" : ".pgm"), bytes);
}

std::string join_scores(const Tensor& scores) {
  std::string out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i) out += ',';
    out += io::format_real(scores[i]);
  }
  return out;
}

int run_explain(const ExplainArgs& a, const CLI::App& cmd) {
  const io::ModelBundle bundle = io::load_model(a.model);
  const Network& net = bundle.network;
  const Normalization& norm = bundle.normalization;

  Tensor x;
  std::string source;
  if (!a.image.empty()) {
    x = norm.normalize(io::decode_netpbm(io::read_file(a.image)));
    source = a.image;
  } else {
    const Dataset data =
        load_split_for(a.data.dir, a.data.split, net.input_shape()[0], a.data.color_seed);
    if (a.index >= data.size())
      throw ArgumentError("--index " + std::to_string(a.index) + " out of range (" +
                          std::to_string(data.size()) + " images)");
    x = norm.normalize(data.images[a.index]);
    source = a.data.dir + ":" + a.data.split + ":" + std::to_string(a.index);
  }
  if (x.shape() != net.input_shape())
    throw ShapeError("image " + shape_string(x.shape()) + " does not fit model input " +
                     shape_string(net.input_shape()));

  GameConfig cfg;
  if (!a.config.empty()) {
    const auto bytes = io::read_file(a.config);
    cfg = io::parse_run_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  auto given = [&](const char* flag) { return cmd.count(flag) > 0 || a.config.empty(); };
  if (given("--game")) cfg.game = parse_game_kind(a.game);
  if (given("--target-class")) {
    if (a.target == "auto") {
      cfg.target_class.reset();
    } else {
      std::size_t used = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(a.target, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != a.target.size() || a.target.empty())
        throw ArgumentError("--target-class must be 'auto' or a class index");
      cfg.target_class = v;
    }
  }
  if (given("--lambda")) cfg.lambda = a.lambda;
  if (given("--lr")) cfg.learning_rate = a.lr;
  if (given("--iters")) cfg.iterations = a.iters;
  if (given("--seed")) cfg.seed = a.seed;
  if (given("--no-defense")) cfg.defended = !a.no_defense;
  if (given("--similarity")) {
    if (a.similarity == "auto") cfg.similarity.reset();
    else cfg.similarity = parse_similarity(a.similarity);
  }
  if (given("--reference")) cfg.reference = parse_reference(a.reference);
  if (cfg.target_class && *cfg.target_class >= net.num_classes())
    throw ArgumentError("target class " + std::to_string(*cfg.target_class) + " out of range (" +
                        std::to_string(net.num_classes()) + " classes)");

  OptimizeOptions opts;
  opts.normalization = norm;
  const ExplanationResult res = a.line_search
                                    ? line_search_lambda(net, x, cfg, default_line_search(), opts)
                                    : explain(net, x, cfg, opts);

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_image(out / "mask", render(res, RenderKind::mask));
  write_image(out / "mean_mask", render(res, RenderKind::mean_mask));
  write_image(out / "explanation", norm.denormalize(res.explanation));
  if (removes_evidence(res.game)) {
    write_image(out / "complementary_mask", render(res, RenderKind::complementary_mask));
    write_image(out / "deletion_explanation",
                norm.denormalize(render(res, RenderKind::deletion_explanation)));
  }

  const Tensor image_scores = forward(net, x).scores();
  GameConfig effective = cfg;
  effective.target_class = res.target_class;
  effective.lambda = res.chosen_lambda;
  io::KeyValues manifest = io::parse_key_values(io::format_run_config(effective));
  manifest.insert(manifest.begin(), {"source", source});
  manifest.insert(manifest.begin(), {"model", a.model});
  manifest.emplace_back("line_search", a.line_search ? "true" : "false");
  manifest.emplace_back("chosen_lambda", io::format_real(res.chosen_lambda));
  manifest.emplace_back("iterations_run", std::to_string(res.iterations));
  manifest.emplace_back("converged", res.converged ? "true" : "false");
  manifest.emplace_back("image_class", std::to_string(argmax(image_scores)));
  manifest.emplace_back("image_target_score", io::format_real(image_scores[res.target_class]));
  manifest.emplace_back("explanation_class", std::to_string(argmax(res.scores)));
  manifest.emplace_back("target_score", io::format_real(res.score_of_target));
  manifest.emplace_back("scores", join_scores(res.scores));
  write_text(out / "manifest.txt", io::format_key_values(manifest));
  std::cout << "target_class=" << res.target_class << " target_score="
            << io::format_real(res.score_of_target) << " converged=" << res.converged << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// validate-defense
// ---------------------------------------------------------------------------

struct DefenseArgs {
  std::string model;
  DataArgs data;
  std::string mode = "images";
  std::size_t n = 100;
  bool undefended = false;
  DefenseConfig cfg;
  std::string out;
};

int run_validate_defense(const DefenseArgs& a) {
  const io::ModelBundle bundle = io::load_model(a.model);
  const Network& net = bundle.network;
  const bool defended = !a.undefended;
  std::vector<DefenseTrial> trials;
  if (a.mode == "images") {
    const Dataset data = load_split_for(a.data.dir, a.data.split, net.input_shape()[0],
                                        a.data.color_seed)
                             .normalized(bundle.normalization);
    trials = run_defense_validation(net, data, a.n, defended, a.cfg);
  } else if (a.mode == "black") {
    trials = run_blackimage_validation(net, bundle.normalization, defended, a.cfg);
  } else {
    throw ArgumentError("--mode must be images or black");
  }
  std::ostringstream csv;
  write_trials_csv(csv, trials);
  if (a.out.empty()) std::cout << csv.str();
  else write_text(a.out, csv.str());
  std::cout << "mode=" << a.mode << " defended=" << (defended ? "true" : "false")
            << " trials=" << trials.size() << " success_ratio="
            << io::format_real(success_ratio(trials)) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// deletion-metric
// ---------------------------------------------------------------------------

struct DeletionArgs {
  std::string model;
  DataArgs data;
  std::size_t n = 100;
  std::string baseline = "fgvis";
  std::uint64_t seed = 0;
  int iters = 500;
  std::size_t jobs = 1;
  std::string out_dir;
};

int run_deletion_metric(const DeletionArgs& a) {
  if (a.baseline != "fgvis" && a.baseline != "random" && a.baseline != "input-gradient")
    throw ArgumentError("--baseline must be fgvis, random or input-gradient");
  const io::ModelBundle bundle = io::load_model(a.model);
  const Network& net = bundle.network;
  const Dataset data =
      load_split_for(a.data.dir, a.data.split, net.input_shape()[0], a.data.color_seed)
          .normalized(bundle.normalization);
  std::size_t n = a.n;
  if (n > data.size()) {
    log("warning: --n " + std::to_string(n) + " exceeds the split; using " +
        std::to_string(data.size()));
    n = data.size();
  }
  if (n == 0) throw ArgumentError("--n must be at least 1");

  std::vector<DeletionCurve> curves(n);
  const Rng root(a.seed);
  parallel_for(n, a.jobs, [&](std::size_t i) {
    const Tensor& x = data.images[i];
    Tensor imp;
    if (a.baseline == "fgvis") {
      imp = deletion_game_importance(net, x, root.split(i).seed(), a.iters);
    } else if (a.baseline == "random") {
      Rng rng = root.split(i);
      imp = random_importance(x.dim(1), x.dim(2), rng);
    } else {
      imp = gradient_importance(net, x);
    }
    curves[i] = deletion_curve(net, x, imp);
  });

  std::ostringstream summary;
  summary << "image_id,auc\n";
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    summary << i << ',' << io::format_real(curves[i].auc) << '\n';
    total += curves[i].auc;
  }
  const double mean = total / static_cast<double>(n);
  if (!a.out_dir.empty()) {
    const fs::path out = fs::path(a.out_dir) / a.baseline;
    fs::create_directories(out / "curves");
    for (std::size_t i = 0; i < n; ++i) {
      std::ostringstream csv;
      write_curve_csv(csv, curves[i]);
      write_text(out / "curves" / (std::to_string(i) + ".csv"), csv.str());
    }
    write_text(out / "summary.csv", summary.str());
  } else {
    std::cout << summary.str();
  }
  std::cout << "baseline=" << a.baseline << " images=" << n
            << " mean_auc=" << io::format_real(mean) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// color-bias, entropy-report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string model;
  DataArgs data;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) std::cout << text;
  else write_text(out, text);
}

int run_color_bias(const ReportArgs& a) {
  const io::ModelBundle bundle = io::load_model(a.model);
  const Network& net = bundle.network;
  if (net.input_shape()[0] != 3) throw ArgumentError("color-bias needs a 3-channel model");
  const Dataset data = load_split_for(a.data.dir, a.data.split, 3, a.data.color_seed)
                           .normalized(bundle.normalization);
  std::vector<ColorBiasRow> rows;
  for (std::size_t c = 0; c < net.num_classes(); ++c)
    rows.push_back(color_bias_ratio(net, data, c, a.jobs));
  std::ostringstream csv;
  write_color_bias_csv(csv, rows);
  emit(a.out, csv.str());
  return 0;
}

int run_entropy_report(const ReportArgs& a) {
  const io::ModelBundle bundle = io::load_model(a.model);
  const Network& net = bundle.network;
  const Dataset data =
      load_split_for(a.data.dir, a.data.split, net.input_shape()[0], a.data.color_seed)
          .normalized(bundle.normalization);
  Rng rng(a.seed);
  const auto rows = reference_entropy_report(net, bundle.normalization, data, a.n, rng, a.jobs);
  std::ostringstream csv;
  write_entropy_csv(csv, rows);
  emit(a.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-optimization explanations for a small CNN, with evaluation harnesses"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the fixture CNN on an IDX digit set");
  train_args.data.add(train_cmd);
  train_cmd->add_option("--out", train_args.out, "model file to write")->required();
  train_cmd->add_option("--log", train_args.log_csv, "training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--epochs", train_args.cfg.epochs, "epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.cfg.batch_size, "minibatch size")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_args.cfg.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", train_args.cfg.momentum, "momentum")->capture_default_str();
  train_cmd->add_option("--seed", train_args.cfg.seed, "initialization and shuffle seed")
      ->capture_default_str();
  train_cmd->add_option("--target-accuracy", train_args.cfg.target_accuracy,
                        "warn when test accuracy ends below this")
      ->capture_default_str();
  train_cmd->add_option("--width1", train_args.width1, "first conv width")->capture_default_str();
  train_cmd->add_option("--width2", train_args.width2, "second conv width")->capture_default_str();
  train_cmd->add_flag("--color", train_args.color, "train on tinted 3-channel digits");
  train_cmd->add_option("--jobs", train_args.jobs, "threads for evaluation")->capture_default_str();

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "explain one image with a mask game");
  explain_cmd->add_option("--model", ex.model, "model file")->required();
  auto* image_opt = explain_cmd->add_option("--image", ex.image, "PGM/PPM image in [0, 255]");
  ex.data.add(explain_cmd);
  explain_cmd->add_option("--index", ex.index, "image index in the split (without --image)")
      ->capture_default_str()
      ->excludes(image_opt);
  explain_cmd->add_option("--config", ex.config, "key=value run config; flags given override it");
  explain_cmd->add_option("--game", ex.game, "preservation, deletion, generation or repression")
      ->capture_default_str();
  explain_cmd->add_option("--target-class", ex.target, "class index, or auto for the top class")
      ->capture_default_str();
  auto* lambda_opt =
      explain_cmd->add_option("--lambda", ex.lambda, "sparsity weight")->capture_default_str();
  explain_cmd->add_flag("--line-search", ex.line_search, "search lambda from 1e-4 down to 1e-10")
      ->excludes(lambda_opt);
  explain_cmd->add_option("--lr", ex.lr, "mask learning rate")->capture_default_str();
  explain_cmd->add_option("--iters", ex.iters, "optimizer steps")->capture_default_str();
  explain_cmd->add_option("--seed", ex.seed, "mask initialization seed")->capture_default_str();
  explain_cmd->add_flag("--no-defense", ex.no_defense, "disable gradient filtering");
  explain_cmd->add_option("--similarity", ex.similarity,
                          "auto, cross_entropy or negative_probability")
      ->capture_default_str();
  explain_cmd->add_option("--reference", ex.reference,
                          "zero, gaussian_noise:<sigma> or blurred:<sigma>")
      ->capture_default_str();
  explain_cmd->add_option("--out-dir", ex.out_dir, "output directory")->required();

  DefenseArgs def;
  auto* defense_cmd =
      app.add_subcommand("validate-defense", "measure how often adversarial classes are generated");
  defense_cmd->add_option("--model", def.model, "model file")->required();
  def.data.add(defense_cmd);
  defense_cmd->add_option("--mode", def.mode, "images or black")->capture_default_str();
  defense_cmd->add_option("--n", def.n, "number of eligible images (images mode)")
      ->capture_default_str();
  auto* defended_flag = defense_cmd->add_flag("--defended", "filter gradients (default)");
  defense_cmd->add_flag("--undefended", def.undefended, "disable gradient filtering")
      ->excludes(defended_flag);
  defense_cmd->add_option("--seed", def.cfg.seed, "mask initialization seed")->capture_default_str();
  defense_cmd->add_option("--iters", def.cfg.iterations, "optimizer steps")->capture_default_str();
  defense_cmd->add_option("--threshold", def.cfg.success_threshold, "success score")
      ->capture_default_str();
  defense_cmd->add_option("--confidence", def.cfg.min_confidence, "eligibility confidence")
      ->capture_default_str();
  defense_cmd->add_option("--jobs", def.cfg.jobs, "parallel trials")->capture_default_str();
  defense_cmd->add_option("--out", def.out, "trial CSV (default stdout)");

  DeletionArgs del;
  auto* deletion_cmd = app.add_subcommand("deletion-metric", "deletion-curve AUC over a split");
  deletion_cmd->add_option("--model", del.model, "model file")->required();
  del.data.add(deletion_cmd);
  deletion_cmd->add_option("--n", del.n, "images from the start of the split")->capture_default_str();
  deletion_cmd->add_option("--baseline", del.baseline, "fgvis, random or input-gradient")
      ->capture_default_str();
  deletion_cmd->add_option("--seed", del.seed, "seed")->capture_default_str();
  deletion_cmd->add_option("--iters", del.iters, "optimizer steps per lambda (fgvis)")
      ->capture_default_str();
  deletion_cmd->add_option("--jobs", del.jobs, "parallel images")->capture_default_str();
  deletion_cmd->add_option("--out-dir", del.out_dir, "curve and summary CSVs (default stdout)");

  ReportArgs color;
  auto* color_cmd = app.add_subcommand("color-bias", "per-class accuracy kept after channel swaps");
  color_cmd->add_option("--model", color.model, "3-channel model file")->required();
  color.data.add(color_cmd);
  color_cmd->add_option("--jobs", color.jobs, "threads")->capture_default_str();
  color_cmd->add_option("--out", color.out, "CSV (default stdout)");

  ReportArgs ent;
  auto* entropy_cmd = app.add_subcommand("entropy-report", "prediction entropy of reference images");
  entropy_cmd->add_option("--model", ent.model, "model file")->required();
  ent.data.add(entropy_cmd);
  entropy_cmd->add_option("--n", ent.n, "samples per row")->capture_default_str();
  entropy_cmd->add_option("--seed", ent.seed, "noise seed")->capture_default_str();
  entropy_cmd->add_option("--jobs", ent.jobs, "threads")->capture_default_str();
  entropy_cmd->add_option("--out", ent.out, "CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(train_args);
    if (*explain_cmd) return run_explain(ex, *explain_cmd);
    if (*defense_cmd) return run_validate_defense(def);
    if (*deletion_cmd) return run_deletion_metric(del);
    if (*color_cmd) return run_color_bias(color);
    if (*entropy_cmd) return run_entropy_report(ent);
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 1;
}
