// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grc/point_cloud.hpp"

namespace grc {

/// Synthetic adverse-weather corruption. Reflectance becomes
/// r * exp(-attenuation * d) + N(0, reflectance_noise^2), clamped at 0.
struct WeatherParams {
  double attenuation = 0.0;  // 1/m
  double reflectance_noise = 0.0;
  double drop_fraction = 0.0;     // each point dropped independently
  double clutter_fraction = 0.0;  // injected points, as a fraction of n
  double clutter_min_range = 1.0;
  double clutter_max_range = 8.0;
  double clutter_min_reflectance = 0.6;
  double clutter_max_reflectance = 1.0;
  double jitter = 0.0;  // max displacement of surviving points, meters

  static constexpr double kMaxJitter = 0.01;
  void validate() const;
};

/// Names accepted by `corrupt_weather`, in report order.
const std::vector<std::string>& weather_kinds();

/// Preset table keyed by kind. The built-in table matches
/// configs/corruption_presets.json.
using WeatherPresets = std::map<std::string, WeatherParams>;
const WeatherPresets& builtin_weather_presets();

const WeatherParams& lookup_preset(const WeatherPresets& presets, const std::string& kind);

/// Surviving points keep their labels; injected clutter is labeled
/// kNoiseLabel. Clutter is placed along the ray of a randomly chosen input
/// point so it stays inside the sensor's field of view.
PointCloud corrupt_weather(const PointCloud& cloud, const WeatherParams& params, std::uint64_t seed);
PointCloud corrupt_weather(const PointCloud& cloud, const std::string& kind, std::uint64_t seed,
                           const WeatherPresets& presets = builtin_weather_presets());

}  // namespace grc
