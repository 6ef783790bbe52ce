// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "grc/errors.hpp"
#include "grc/rng.hpp"

namespace grc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinT = 1e-6;

std::optional<double> intersect_plane(double plane_z, const std::array<double, 3>& o,
                                      const std::array<double, 3>& d) {
  if (d[2] == 0.0) return std::nullopt;
  const double t = (plane_z - o[2]) / d[2];
  if (t <= kMinT) return std::nullopt;
  return t;
}

// Slab test in the box frame.
std::optional<double> intersect_box(const ScenePrimitive& b, const std::array<double, 3>& o,
                                    const std::array<double, 3>& d) {
  const double c = std::cos(-b.yaw), s = std::sin(-b.yaw);
  const double ox = o[0] - b.cx, oy = o[1] - b.cy;
  const std::array<double, 3> lo{c * ox - s * oy, s * ox + c * oy, o[2] - b.cz};
  const std::array<double, 3> ld{c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]};
  const std::array<double, 3> half{b.sx / 2, b.sy / 2, b.sz / 2};
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (ld[k] == 0.0) {
      if (std::abs(lo[k]) > half[k]) return std::nullopt;
      continue;
    }
    double a = (-half[k] - lo[k]) / ld[k];
    double e = (half[k] - lo[k]) / ld[k];
    if (a > e) std::swap(a, e);
    t0 = std::max(t0, a);
    t1 = std::min(t1, e);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 > kMinT) return t0;
  if (t1 > kMinT) return t1;
  return std::nullopt;
}

std::optional<double> intersect_cylinder(const ScenePrimitive& cyl, const std::array<double, 3>& o,
                                         const std::array<double, 3>& d) {
  const double r = cyl.sx;
  const double z0 = cyl.cz, z1 = cyl.cz + cyl.sz;
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kMinT && (!best || t < *best)) best = t;
  };
  const double px = o[0] - cyl.cx, py = o[1] - cyl.cy;
  const double a = d[0] * d[0] + d[1] * d[1];
  if (a > 0.0) {
    const double b = 2.0 * (px * d[0] + py * d[1]);
    const double c = px * px + py * py - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        const double z = o[2] + t * d[2];
        if (z >= z0 && z <= z1) consider(t);
      }
    }
  }
  for (double cap : {z0, z1}) {
    if (auto t = intersect_plane(cap, o, d)) {
      const double x = px + *t * d[0], y = py + *t * d[1];
      if (x * x + y * y <= r * r) consider(*t);
    }
  }
  return best;
}

std::optional<double> intersect_patch(const ScenePrimitive& p, const std::array<double, 3>& o,
                                      const std::array<double, 3>& d) {
  auto t = intersect_plane(p.cz, o, d);
  if (!t) return std::nullopt;
  const double x = o[0] + *t * d[0] - p.cx, y = o[1] + *t * d[1] - p.cy;
  const double c = std::cos(-p.yaw), s = std::sin(-p.yaw);
  const double lx = c * x - s * y, ly = s * x + c * y;
  if (std::abs(lx) <= p.sx / 2 && std::abs(ly) <= p.sy / 2) return t;
  return std::nullopt;
}

double truncated_normal(Rng& rng, double bound) {
  for (;;) {
    const double v = rng.normal();
    if (std::abs(v) <= bound) return v;
  }
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kGround: return "ground";
    case ShapeKind::kPatch: return "patch";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kWall: return "wall";
  }
  return "?";
}

ShapeKind parse_shape_kind(const std::string& name) {
  for (ShapeKind k : {ShapeKind::kGround, ShapeKind::kPatch, ShapeKind::kBox, ShapeKind::kCylinder,
                      ShapeKind::kWall}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown shape kind '" + name + "'");
}

double SensorModel::beam_elevation(int beam) const {
  const double step = (fov_up_deg - fov_down_deg) / beams;
  return (fov_up_deg - (beam + 0.5) * step) * kDeg;
}

double SensorModel::azimuth(int step) const {
  return std::numbers::pi - (step + 0.5) * 2.0 * std::numbers::pi / azimuth_steps;
}

void SceneSpec::validate() const {
  if (num_classes < 2) throw ConfigError("scene: num_classes must be >= 2");
  if (!(sensor.fov_up_deg > sensor.fov_down_deg)) throw ConfigError("scene: fov_up must exceed fov_down");
  if (sensor.beams < 2) throw ConfigError("scene: beams must be >= 2");
  if (sensor.azimuth_steps < 1) throw ConfigError("scene: azimuth_steps must be >= 1");
  if (!(sensor.max_range > 0.0)) throw ConfigError("scene: max_range must be positive");
  if (sensor.range_noise < 0.0 || sensor.reflectance_noise < 0.0) {
    throw ConfigError("scene: noise levels must be non-negative");
  }
  if (!(sensor.falloff_distance > 0.0)) throw ConfigError("scene: falloff_distance must be positive");
  auto check_label = [&](int label) {
    if (label < 0 || label >= num_classes) {
      throw ConfigError("scene: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  };
  for (const auto& o : objects) {
    check_label(o.label);
    if (o.reflectance < 0.0) throw ConfigError("scene: negative reflectance");
  }
  for (const auto& t : templates) {
    check_label(t.label);
    if (t.kind == ShapeKind::kGround) throw ConfigError("scene: ground cannot be templated");
    if (t.min_count < 0 || t.max_count < t.min_count) throw ConfigError("scene: bad template count range");
    if (t.min_distance < 0.0 || t.max_distance < t.min_distance) {
      throw ConfigError("scene: bad template distance range");
    }
    for (const auto& r : {t.size_x, t.size_y, t.size_z}) {
      if (!(r[0] > 0.0) || r[1] < r[0]) throw ConfigError("scene: bad template size range");
    }
    if (t.reflectance < 0.0) throw ConfigError("scene: negative reflectance");
  }
}

std::vector<ScenePrimitive> instantiate_scene(const SceneSpec& spec) {
  spec.validate();
  std::vector<ScenePrimitive> prims = spec.objects;
  Rng rng = Rng(spec.seed).split("layout");
  for (const auto& t : spec.templates) {
    const int count = t.min_count + static_cast<int>(rng.below(t.max_count - t.min_count + 1));
    for (int i = 0; i < count; ++i) {
      ScenePrimitive p;
      p.kind = t.kind;
      p.label = t.label;
      p.reflectance = t.reflectance;
      const double dist = rng.uniform(t.min_distance, t.max_distance);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p.cx = dist * std::cos(angle);
      p.cy = dist * std::sin(angle);
      p.yaw = rng.uniform(0.0, std::numbers::pi);
      p.sx = rng.uniform(t.size_x[0], t.size_x[1]);
      p.sy = rng.uniform(t.size_y[0], t.size_y[1]);
      p.sz = rng.uniform(t.size_z[0], t.size_z[1]);
      switch (t.kind) {
        case ShapeKind::kBox:
        case ShapeKind::kWall: p.cz = spec.ground_height + p.sz / 2; break;
        case ShapeKind::kCylinder:
        case ShapeKind::kPatch: p.cz = spec.ground_height; break;
        case ShapeKind::kGround: break;
      }
      prims.push_back(p);
    }
  }
  return prims;
}

std::optional<double> intersect(const ScenePrimitive& prim, const std::array<double, 3>& origin,
                                const std::array<double, 3>& dir) {
  switch (prim.kind) {
    case ShapeKind::kGround: return intersect_plane(prim.cz, origin, dir);
    case ShapeKind::kPatch: return intersect_patch(prim, origin, dir);
    case ShapeKind::kBox:
    case ShapeKind::kWall: return intersect_box(prim, origin, dir);
    case ShapeKind::kCylinder: return intersect_cylinder(prim, origin, dir);
  }
  return std::nullopt;
}

PointCloud generate_scene(const SceneSpec& spec) {
  const std::vector<ScenePrimitive> prims = instantiate_scene(spec);
  const SensorModel& sensor = spec.sensor;
  Rng noise = Rng(spec.seed).split("sensor-noise");
  const std::array<double, 3> origin{0.0, 0.0, 0.0};
  PointCloud cloud;
  for (int beam = 0; beam < sensor.beams; ++beam) {
    const double el = sensor.beam_elevation(beam);
    for (int step = 0; step < sensor.azimuth_steps; ++step) {
      const double az = sensor.azimuth(step);
      const std::array<double, 3> dir{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                      std::sin(el)};
      double best_t = std::numeric_limits<double>::infinity();
      const ScenePrimitive* hit = nullptr;
      for (const auto& p : prims) {
        auto t = intersect(p, origin, dir);
        if (!t) continue;
        // Patches sit exactly on the ground plane and win the tie.
        const bool wins = p.kind == ShapeKind::kPatch ? *t <= best_t : *t < best_t;
        if (wins) {
          best_t = *t;
          hit = &p;
        }
      }
      if (!hit || best_t > sensor.max_range) continue;
      const double t = best_t + sensor.range_noise * truncated_normal(noise, 3.0);
      const double falloff = 1.0 / (1.0 + (best_t / sensor.falloff_distance) * (best_t / sensor.falloff_distance));
      const double r = std::max(0.0, hit->reflectance * falloff + sensor.reflectance_noise * noise.normal());
      if (t <= 0.0) continue;
      cloud.points.push_back({origin[0] + t * dir[0], origin[1] + t * dir[1], origin[2] + t * dir[2], r});
      cloud.labels.push_back(hit->label);
    }
  }
  return cloud;
}

}  // namespace grc
