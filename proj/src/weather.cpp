// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/weather.hpp"

#include <algorithm>
#include <cmath>

#include "grc/errors.hpp"
#include "grc/rng.hpp"

namespace grc {

void WeatherParams::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("weather: ") + name + " must be in [0, 1]");
  };
  fraction(drop_fraction, "drop_fraction");
  fraction(clutter_fraction, "clutter_fraction");
  if (attenuation < 0.0 || reflectance_noise < 0.0) {
    throw ConfigError("weather: attenuation and reflectance_noise must be non-negative");
  }
  if (!(jitter >= 0.0 && jitter <= kMaxJitter)) throw ConfigError("weather: jitter must be in [0, 0.01] m");
  if (!(clutter_min_range > 0.0) || clutter_max_range < clutter_min_range) {
    throw ConfigError("weather: bad clutter range interval");
  }
  if (clutter_min_reflectance < 0.0 || clutter_max_reflectance < clutter_min_reflectance) {
    throw ConfigError("weather: bad clutter reflectance interval");
  }
}

const std::vector<std::string>& weather_kinds() {
  static const std::vector<std::string> kinds{"fog_dense", "fog_light", "rain", "snow"};
  return kinds;
}

const WeatherPresets& builtin_weather_presets() {
  static const WeatherPresets presets = [] {
    WeatherPresets p;
    WeatherParams fog_dense;
    fog_dense.attenuation = 0.12;
    fog_dense.reflectance_noise = 0.02;
    fog_dense.drop_fraction = 0.3;
    fog_dense.jitter = 0.005;
    p["fog_dense"] = fog_dense;

    WeatherParams fog_light;
    fog_light.attenuation = 0.04;
    fog_light.reflectance_noise = 0.01;
    fog_light.drop_fraction = 0.1;
    fog_light.jitter = 0.005;
    p["fog_light"] = fog_light;

    WeatherParams rain;
    rain.attenuation = 0.03;
    rain.reflectance_noise = 0.05;
    rain.drop_fraction = 0.15;
    rain.clutter_fraction = 0.02;
    rain.jitter = 0.01;
    p["rain"] = rain;

    WeatherParams snow;
    snow.attenuation = 0.05;
    snow.reflectance_noise = 0.08;
    snow.drop_fraction = 0.2;
    snow.clutter_fraction = 0.05;
    snow.jitter = 0.01;
    p["snow"] = snow;
    return p;
  }();
  return presets;
}

const WeatherParams& lookup_preset(const WeatherPresets& presets, const std::string& kind) {
  auto it = presets.find(kind);
  if (it == presets.end()) throw ConfigError("unknown corruption kind '" + kind + "'");
  return it->second;
}

PointCloud corrupt_weather(const PointCloud& cloud, const WeatherParams& params, std::uint64_t seed) {
  params.validate();
  cloud.validate();
  const Rng root(seed);
  Rng drop_rng = root.split("drop");
  Rng noise_rng = root.split("reflectance");
  Rng jitter_rng = root.split("jitter");
  Rng clutter_rng = root.split("clutter");
  const bool labeled = cloud.has_labels();

  PointCloud out;
  out.points.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // Draws are made for every point so the stream does not depend on which
    // earlier points survived.
    const double u_drop = drop_rng.uniform();
    const double n_r = noise_rng.normal();
    double jx = 0.0, jy = 0.0, jz = 0.0;
    if (params.jitter > 0.0) {
      // Uniform in the ball of radius `jitter`.
      const double gx = jitter_rng.normal(), gy = jitter_rng.normal(), gz = jitter_rng.normal();
      const double norm = std::sqrt(gx * gx + gy * gy + gz * gz);
      const double radius = params.jitter * std::cbrt(jitter_rng.uniform());
      if (norm > 0.0) {
        jx = gx / norm * radius;
        jy = gy / norm * radius;
        jz = gz / norm * radius;
      }
    }
    if (u_drop < params.drop_fraction) continue;
    Point p = cloud.points[i];
    const double d = p.range();
    p.r = std::max(0.0, p.r * std::exp(-params.attenuation * d) + params.reflectance_noise * n_r);
    p.x += jx;
    p.y += jy;
    p.z += jz;
    out.points.push_back(p);
    if (labeled) out.labels.push_back(cloud.labels[i]);
  }

  const auto clutter = static_cast<std::size_t>(std::llround(params.clutter_fraction * cloud.size()));
  for (std::size_t k = 0; k < clutter; ++k) {
    const Point& along = cloud.points[clutter_rng.below(cloud.size())];
    const double d = along.range();
    const double target = clutter_rng.uniform(params.clutter_min_range, params.clutter_max_range);
    const double r = clutter_rng.uniform(params.clutter_min_reflectance, params.clutter_max_reflectance);
    if (d <= 0.0) continue;
    const double s = target / d;
    out.points.push_back({along.x * s, along.y * s, along.z * s, r});
    if (labeled) out.labels.push_back(kNoiseLabel);
  }
  return out;
}

PointCloud corrupt_weather(const PointCloud& cloud, const std::string& kind, std::uint64_t seed,
                           const WeatherPresets& presets) {
  return corrupt_weather(cloud, lookup_preset(presets, kind), seed);
}

}  // namespace grc
