// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grc/config_io.hpp"
#include "grc/metrics.hpp"
#include "grc/model.hpp"
#include "grc/weather.hpp"

namespace grc {

/// "none" followed by the corruption kinds.
const std::vector<std::string>& eval_presets();

/// Seed for corrupting scene `index` under `preset`:
/// Rng(seed).split("eval").split(preset).split(index).next().
std::uint64_t corruption_seed(std::uint64_t seed, const std::string& preset, std::size_t index);

struct PresetResult {
  std::string preset;  // "all" pools every corruption preset
  std::size_t points = 0;
  IouReport report;
};

/// Evaluates each preset on corrupted copies of `scenes`. When more than one
/// corruption preset is requested, a pooled "all" row follows them.
std::vector<PresetResult> evaluate_presets(const GrcModel& model, const std::vector<PointCloud>& scenes,
                                           const std::vector<std::string>& presets, std::uint64_t seed,
                                           const WeatherPresets& table = builtin_weather_presets());

Json eval_report_json(const std::vector<PresetResult>& results, const ModelConfig& config, std::size_t scenes,
                      std::uint64_t seed);

/// Fixed-width table with one column per preset.
std::string eval_table(const std::vector<PresetResult>& results);

}  // namespace grc
