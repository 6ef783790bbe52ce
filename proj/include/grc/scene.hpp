// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grc/point_cloud.hpp"

namespace grc {

enum class ShapeKind {
  kGround,    // infinite plane z = cz
  kPatch,     // rectangle painted onto the ground plane; no geometric footprint
  kBox,       // oriented box, extents (sx, sy, sz), centered at (cx, cy, cz)
  kCylinder,  // vertical, radius sx, from z = cz up to cz + sz
  kWall,      // thin box; same geometry as kBox
};

std::string to_string(ShapeKind kind);
ShapeKind parse_shape_kind(const std::string& name);

/// One concrete object in a scene.
struct ScenePrimitive {
  ShapeKind kind = ShapeKind::kGround;
  int label = 0;
  double reflectance = 0.3;  // base reflectance of the material
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double sx = 1.0, sy = 1.0, sz = 1.0;
  double yaw = 0.0;  // radians, about +z
};

/// Rule for placing randomly sized copies of a primitive around the sensor.
struct ObjectTemplate {
  ShapeKind kind = ShapeKind::kBox;
  int label = 0;
  double reflectance = 0.3;
  int min_count = 1;
  int max_count = 1;
  double min_distance = 5.0;  // of the object center, in the xy plane
  double max_distance = 20.0;
  std::array<double, 2> size_x{1.0, 1.0};
  std::array<double, 2> size_y{1.0, 1.0};
  std::array<double, 2> size_z{1.0, 1.0};
};

/// Spinning single-return LiDAR at the origin.
struct SensorModel {
  int beams = 32;
  int azimuth_steps = 512;
  double fov_up_deg = 3.0;
  double fov_down_deg = -25.0;
  double max_range = 60.0;
  /// Gaussian range jitter along the ray, truncated at 3 sigma.
  double range_noise = 0.01;
  double reflectance_noise = 0.01;
  /// Intensity falls off as base / (1 + (d / falloff_distance)^2).
  double falloff_distance = 10.0;

  double beam_elevation(int beam) const;  // radians
  double azimuth(int step) const;         // radians
};

struct SceneSpec {
  int num_classes = 4;
  double ground_height = -1.73;  // used to rest templated objects on the ground
  std::vector<ScenePrimitive> objects;
  std::vector<ObjectTemplate> templates;
  SensorModel sensor;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the spec cannot describe a scene.
  void validate() const;
};

/// Fixed objects plus one random draw of every template.
std::vector<ScenePrimitive> instantiate_scene(const SceneSpec& spec);

/// Nearest intersection distance of a ray with a primitive.
std::optional<double> intersect(const ScenePrimitive& prim, const std::array<double, 3>& origin,
                                const std::array<double, 3>& dir);

/// Simulates one sweep: every (beam, azimuth) ray returns the nearest hit, if
/// any, labeled with that primitive's class. Deterministic in `spec.seed`.
PointCloud generate_scene(const SceneSpec& spec);

}  // namespace grc
