// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grc/bytes.hpp"
#include "grc/config_io.hpp"
#include "grc/dataset.hpp"
#include "grc/errors.hpp"
#include "grc/evaluate.hpp"
#include "grc/histogram.hpp"
#include "grc/kitti_io.hpp"
#include "grc/range_image.hpp"
#include "grc/runtime.hpp"
#include "grc/training.hpp"
#include "grc/verify.hpp"
#include "grc/weather.hpp"

namespace fs = std::filesystem;
using namespace grc;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3, kVerifyFailed = 4 };

bool quiet() {
  const char* v = std::getenv("GRC_QUIET");
  return v && *v && std::string(v) != "0";
}

void info(const std::string& msg) {
  if (!quiet()) std::cerr << msg << "\n";
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string spec;
  std::size_t count = 0;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const GenArgs& a) {
  SceneSpec spec = scene_spec_from_json(load_json_file(a.spec));
  const std::uint64_t seed = a.seed.value_or(spec.seed);
  const Json manifest = write_dataset(a.out, spec, a.count, seed);
  std::size_t points = 0;
  for (const auto& s : manifest.at("scenes")) points += s.at("points").get<std::size_t>();
  info("wrote " + std::to_string(a.count) + " scenes (" + std::to_string(points) + " points) to " + a.out);
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::optional<std::string> ablation;
  std::optional<std::size_t> steps;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> resume;
};

struct RunConfig {
  std::string data;
  std::string output;
  ModelConfig model;
  TrainConfig train;
};

RunConfig run_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> known{"data", "output", "seed", "model", "train"};
  std::string unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown keys in run config: " + unknown);
  RunConfig rc;
  try {
    if (doc.contains("data")) rc.data = doc.at("data").get<std::string>();
    if (doc.contains("output")) rc.output = doc.at("output").get<std::string>();
    if (doc.contains("model")) rc.model = model_config_from_json(doc.at("model"));
    if (doc.contains("train")) rc.train = train_config_from_json(doc.at("train"));
    if (doc.contains("seed")) {
      const auto seed = doc.at("seed").get<std::uint64_t>();
      rc.model.seed = seed;
      rc.train.seed = seed;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return rc;
}

int cmd_train(const TrainArgs& a) {
  RunConfig rc = run_config_from_json(load_json_file(a.config));
  if (a.ablation) apply_ablation(rc.model, *a.ablation);
  if (a.steps) rc.train.steps = *a.steps;
  if (a.data) rc.data = *a.data;
  if (a.out) rc.output = *a.out;
  if (a.seed) {
    rc.model.seed = *a.seed;
    rc.train.seed = *a.seed;
  }
  if (rc.data.empty()) throw ConfigError("no data directory (set \"data\" or --data)");
  if (rc.output.empty()) throw ConfigError("no output directory (set \"output\" or --out)");
  rc.model.validate();
  rc.train.validate();
  if (a.resume && !fs::exists(*a.resume)) throw IoError("checkpoint " + *a.resume + " not found");

  // Everything is validated before the output directory is touched.
  const Dataset ds = load_dataset(rc.data);
  if (ds.scenes.empty()) throw DataError("data directory " + rc.data + " has no scenes");
  if (ds.num_classes != rc.model.num_classes) {
    throw DataError("dataset has " + std::to_string(ds.num_classes) + " classes, model expects " +
                    std::to_string(rc.model.num_classes));
  }

  const fs::path out = rc.output;
  std::error_code ec;
  fs::create_directories(out / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  save_json_file(out / "run.json", {{"data", rc.data},
                                    {"output", rc.output},
                                    {"model", to_json(rc.model)},
                                    {"train", to_json(rc.train)}});
  std::ofstream log(out / "train.log", std::ios::app);
  log << timestamp() << " start ablation=" << ablation_of(rc.model) << " steps=" << rc.train.steps
      << " scenes=" << ds.scenes.size() << "\n";

  GrcModel model(rc.model);
  Trainer trainer(model, ds.scenes, rc.train);
  if (a.resume) {
    trainer.load_checkpoint(*a.resume);
    log << timestamp() << " resumed from " << *a.resume << " at step " << trainer.state().step << "\n";
  }

  std::string last_good;
  auto on_epoch = [&](std::size_t epoch) {
    char name[48];
    std::snprintf(name, sizeof name, "epoch_%04zu.grcw", epoch);
    const fs::path ckpt = out / "checkpoints" / name;
    trainer.save_checkpoint(ckpt);
    write_file_atomic(out / "metrics.csv", log_csv(trainer.log()));
    last_good = ckpt.string();
    const LogRow& row = trainer.log().back();
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu step %zu loss %.5f ce %.5f cic %.5f lr %.5f", epoch, row.step,
                  row.loss, row.ce, row.cic, row.lr);
    info(line);
    log << timestamp() << " " << line << "\n";
  };
  try {
    trainer.run(on_epoch);
  } catch (const DivergenceError& e) {
    write_file_atomic(out / "metrics.csv", log_csv(trainer.log()));
    log << timestamp() << " diverged: " << e.what() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << (last_good.empty() ? "no checkpoint was written before divergence"
                                    : "last good checkpoint: " + last_good)
              << "\n";
    return kDivergence;
  }
  trainer.save_checkpoint(out / "model.grcw");
  write_file_atomic(out / "metrics.csv", log_csv(trainer.log()));
  log << timestamp() << " done\n";
  info("checkpoint: " + (out / "model.grcw").string());
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::vector<std::string> presets;
  std::optional<std::string> presets_file;
  std::uint64_t seed = 0;
  std::optional<std::string> report;
  bool json = false;
  std::optional<std::size_t> limit;
};

int cmd_eval(const EvalArgs& a) {
  if (!fs::exists(a.checkpoint)) throw IoError("checkpoint " + a.checkpoint + " not found");
  const WeatherPresets table =
      a.presets_file ? weather_presets_from_json(load_json_file(*a.presets_file)) : builtin_weather_presets();
  std::vector<std::string> presets;
  for (const auto& p : a.presets.empty() ? std::vector<std::string>{"all"} : a.presets) {
    if (p == "all") {
      for (const auto& q : eval_presets()) presets.push_back(q);
    } else if (p == "none" || table.count(p)) {
      presets.push_back(p);
    } else {
      throw ConfigError("unknown corruption preset '" + p + "'");
    }
  }
  Dataset ds = load_dataset(a.data);
  const GrcModel model = load_model(a.checkpoint);
  if (ds.num_classes != model.config().num_classes) {
    throw DataError("checkpoint has " + std::to_string(model.config().num_classes) + " classes, data has " +
                    std::to_string(ds.num_classes));
  }
  if (a.limit && *a.limit < ds.scenes.size()) ds.scenes.resize(*a.limit);
  const auto results = evaluate_presets(model, ds.scenes, presets, a.seed, table);
  const Json report = eval_report_json(results, model.config(), ds.scenes.size(), a.seed);
  if (a.report) save_json_file(*a.report, report);
  if (a.json) {
    std::cout << report.dump(2) << "\n";
    std::cerr << eval_table(results);
  } else {
    std::cout << eval_table(results);
  }
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string suite = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report;
};

int cmd_verify(const VerifyArgs& a) {
  const auto suites = run_suite(a.suite, a.seed);
  bool ok = true;
  Json doc = {{"format", "grc-verify-report"}, {"version", 1}, {"suites", Json::array()}};
  for (const auto& s : suites) {
    Json checks = Json::array();
    for (const auto& c : s.checks) {
      std::printf("%-4s %-12s %-34s max_err %-11.3e tol %-9.1e %s\n", c.passed ? "PASS" : "FAIL", s.suite.c_str(),
                  c.name.c_str(), c.max_error, c.tolerance, c.detail.c_str());
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"max_error", std::isfinite(c.max_error) ? Json(c.max_error) : Json(nullptr)},
                        {"tolerance", c.tolerance},
                        {"detail", c.detail}});
    }
    doc["suites"].push_back({{"suite", s.suite}, {"passed", s.passed()}, {"checks", checks}});
    ok = ok && s.passed();
  }
  if (a.report) save_json_file(*a.report, doc);
  std::printf("%s\n", ok ? "all checks passed" : "verification FAILED");
  return ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
  std::string scan;
  std::optional<std::string> label;
  std::optional<std::string> class_map;
  std::string out;
  std::size_t bins = 64;
  int height = ProjectionConfig{}.height;
  int width = ProjectionConfig{}.width;
  double range_max = 80.0;
  double reflectance_max = 1.0;
  std::optional<std::string> preset;
  std::uint64_t seed = 0;
};

int cmd_inspect(const InspectArgs& a) {
  if (a.class_map && !a.label) throw ConfigError("--class-map requires --label");
  const ClassMap map = a.class_map ? class_map_from_json(load_json_file(*a.class_map)) : ClassMap::identity();
  const PointCloud cloud = a.label ? load_kitti_scan(a.scan, *a.label, map) : load_kitti_scan(a.scan);
  if (cloud.empty()) throw DataError(a.scan + " contains no points");
  ProjectionConfig proj;
  proj.height = a.height;
  proj.width = a.width;
  proj.validate();
  if (a.bins == 0) throw ConfigError("--bins must be positive");

  const fs::path out = a.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  const Histogram dist = histogram(cloud, HistField::kDistance, a.bins);
  const Histogram refl = histogram(cloud, HistField::kReflectance, a.bins);
  write_file_atomic(out / "distance_hist.csv", histogram_csv(dist, true));
  write_file_atomic(out / "reflectance_hist.csv", histogram_csv(refl, true));

  const RangeImage img = spherical_project(cloud, proj);
  write_file_atomic(out / "reflectance.pgm", to_pgm16(img.reflectance, proj.height, proj.width, a.reflectance_max));
  write_file_atomic(out / "range.pgm", to_pgm16(img.range, proj.height, proj.width, a.range_max));
  std::vector<double> mask(img.mask.begin(), img.mask.end());
  write_file_atomic(out / "mask.pgm", to_pgm16(mask, proj.height, proj.width, 1.0));

  Json summary = {{"format", "grc-inspect"},
                  {"version", 1},
                  {"scan", a.scan},
                  {"points", cloud.size()},
                  {"bins", a.bins},
                  {"image", {{"height", proj.height}, {"width", proj.width}, {"valid", img.valid_count()},
                             {"outside_fov", img.outside_fov}, {"skipped_origin", img.skipped_origin}}},
                  {"pgm_scaling", {{"reflectance_max", a.reflectance_max}, {"range_max", a.range_max}}}};
  if (cloud.has_labels()) {
    std::map<int, std::size_t> counts;
    for (int l : cloud.labels) ++counts[l];
    Json by_class = Json::object();
    for (const auto& [id, n] : counts) by_class[std::to_string(id)] = n;
    summary["label_counts"] = by_class;
  }
  if (a.preset) {
    const PointCloud corrupted = corrupt_weather(cloud, *a.preset, a.seed);
    if (corrupted.empty()) throw DataError("corruption removed every point");
    // Bin edges of the clean scan, so the two CSVs align row by row.
    const Histogram cd = histogram(field_values(corrupted, HistField::kDistance), a.bins, dist.lo, dist.hi);
    const Histogram cr = histogram(field_values(corrupted, HistField::kReflectance), a.bins, refl.lo, refl.hi);
    write_file_atomic(out / ("distance_hist_" + *a.preset + ".csv"), histogram_csv(cd, true));
    write_file_atomic(out / ("reflectance_hist_" + *a.preset + ".csv"), histogram_csv(cr, true));
    const RangeImage cimg = spherical_project(corrupted, proj);
    write_file_atomic(out / ("reflectance_" + *a.preset + ".pgm"),
                      to_pgm16(cimg.reflectance, proj.height, proj.width, a.reflectance_max));
    summary["comparison"] = {
        {"preset", *a.preset},
        {"seed", a.seed},
        {"points", corrupted.size()},
        {"distance_shift", normalized_shift(cloud, corrupted, HistField::kDistance)},
        {"reflectance_shift", normalized_shift(cloud, corrupted, HistField::kReflectance)},
    };
  }
  save_json_file(out / "inspect.json", summary);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Reflectance-robust LiDAR segmentation toolkit", "grc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "grc 0.1.0");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate synthetic labeled scenes");
  g->add_option("--spec", gen.spec, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--count", gen.count, "Number of scenes")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Dataset seed (default: the spec's seed)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", train.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  t->add_option("--ablation", train.ablation, "Ablation row")
      ->check(CLI::IsMember(ablation_names()));
  t->add_option("--steps", train.steps, "Override the number of optimizer steps");
  t->add_option("--data", train.data, "Override the training data directory");
  t->add_option("--out", train.out, "Override the output directory");
  t->add_option("--seed", train.seed, "Seed for initialization and training");
  t->add_option("--resume", train.resume, "Resume from a checkpoint");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint under corruption presets");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint (.grcw with .json sidecar)")->required();
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--preset", eval.presets, "none, fog_dense, fog_light, rain, snow or all (repeatable)");
  e->add_option("--presets-file", eval.presets_file, "Corruption preset table JSON")->check(CLI::ExistingFile);
  e->add_option("--seed", eval.seed, "Corruption seed");
  e->add_option("--report", eval.report, "Write the JSON report here");
  e->add_flag("--json", eval.json, "Print the JSON report to stdout and the table to stderr");
  e->add_option("--limit", eval.limit, "Evaluate only the first N scenes");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run numerical verification suites");
  std::vector<std::string> suites = suite_names();
  suites.push_back("all");
  v->add_option("--suite", verify.suite, "Suite name")->check(CLI::IsMember(suites));
  v->add_option("--seed", verify.seed, "Seed for every suite (default: per-suite seeds)");
  v->add_option("--report", verify.report, "Write a JSON report here");

  InspectArgs inspect;
  auto* i = app.add_subcommand("inspect", "Histograms and range-view images of a scan");
  i->add_option("--scan", inspect.scan, "Point cloud .bin")->required()->check(CLI::ExistingFile);
  i->add_option("--label", inspect.label, "Matching .label file")->check(CLI::ExistingFile);
  i->add_option("--class-map", inspect.class_map, "Raw id to training id map JSON")->check(CLI::ExistingFile);
  i->add_option("--out", inspect.out, "Output directory")->required();
  i->add_option("--bins", inspect.bins, "Histogram bins");
  i->add_option("--height", inspect.height, "Range image rows");
  i->add_option("--width", inspect.width, "Range image columns");
  i->add_option("--range-max", inspect.range_max, "Range mapped to 65535 in range.pgm");
  i->add_option("--reflectance-max", inspect.reflectance_max, "Reflectance mapped to 65535");
  i->add_option("--preset", inspect.preset, "Also compare against a corrupted copy")
      ->check(CLI::IsMember(weather_kinds()));
  i->add_option("--seed", inspect.seed, "Corruption seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*v) return cmd_verify(verify);
    if (*i) return cmd_inspect(inspect);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& err) {
    std::cerr << "diverged: " << err.what() << "\n";
    return kDivergence;
  } catch (const ParseError& err) {
    std::cerr << "parse error at byte " << err.offset() << ": " << err.what() << "\n";
    return kData;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  }
  return kUsage;
}
