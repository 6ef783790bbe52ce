// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/evaluate.hpp"

#include <cmath>
#include <cstdio>

#include "grc/errors.hpp"
#include "grc/rng.hpp"
#include "grc/training.hpp"

namespace grc {

const std::vector<std::string>& eval_presets() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"none"};
    for (const auto& k : weather_kinds()) v.push_back(k);
    return v;
  }();
  return names;
}

std::uint64_t corruption_seed(std::uint64_t seed, const std::string& preset, std::size_t index) {
  return Rng(seed).split("eval").split(preset).split(static_cast<std::uint64_t>(index)).next();
}

std::vector<PresetResult> evaluate_presets(const GrcModel& model, const std::vector<PointCloud>& scenes,
                                           const std::vector<std::string>& presets, std::uint64_t seed,
                                           const WeatherPresets& table) {
  const int c = model.config().num_classes;
  for (const auto& s : scenes) {
    if (!s.has_labels()) throw DataError("evaluation scene without labels");
    for (int l : s.labels) {
      if (l >= c && l != kIgnoreLabel && l != kNoiseLabel) {
        throw DataError("label " + std::to_string(l) + " outside the model's " + std::to_string(c) + " classes");
      }
    }
  }
  std::vector<PresetResult> out;
  ConfusionMatrix pooled(c);
  std::size_t pooled_points = 0, corrupted = 0;
  for (const auto& preset : presets) {
    ConfusionMatrix cm(c);
    std::size_t points = 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const PointCloud cloud =
          preset == "none" ? scenes[i] : corrupt_weather(scenes[i], preset, corruption_seed(seed, preset, i), table);
      if (cloud.empty()) continue;
      const std::vector<int> pred = predict(model, cloud);
      cm.add(pred, cloud.labels);
      if (preset != "none") pooled.add(pred, cloud.labels);
      points += cloud.size();
    }
    if (preset != "none") {
      ++corrupted;
      pooled_points += points;
    }
    out.push_back({preset, points, iou_report(cm)});
  }
  if (corrupted > 1) out.push_back({"all", pooled_points, iou_report(pooled)});
  return out;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json eval_report_json(const std::vector<PresetResult>& results, const ModelConfig& config, std::size_t scenes,
                      std::uint64_t seed) {
  Json rows = Json::array();
  for (const auto& r : results) {
    Json per_class = Json::array();
    for (double v : r.report.per_class) per_class.push_back(number_or_null(v));
    rows.push_back({{"preset", r.preset},
                    {"points", r.points},
                    {"miou", r.report.miou},
                    {"accuracy", r.report.accuracy},
                    {"classes_scored", r.report.classes_scored},
                    {"per_class_iou", per_class}});
  }
  return {{"format", "grc-eval-report"}, {"version", 1},         {"ablation", ablation_of(config)},
          {"num_classes", config.num_classes}, {"scenes", scenes}, {"seed", seed},
          {"results", rows}};
}

std::string eval_table(const std::vector<PresetResult>& results) {
  std::string out;
  char buf[64];
  out += "metric    ";
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, " %10s", r.preset.c_str());
    out += buf;
  }
  out += "\n";
  auto row = [&](const char* name, auto get) {
    std::snprintf(buf, sizeof buf, "%-10s", name);
    out += buf;
    for (const auto& r : results) {
      std::snprintf(buf, sizeof buf, " %10.2f", 100.0 * get(r));
      out += buf;
    }
    out += "\n";
  };
  row("mIoU", [](const PresetResult& r) { return r.report.miou; });
  row("accuracy", [](const PresetResult& r) { return r.report.accuracy; });
  return out;
}

}  // namespace grc
