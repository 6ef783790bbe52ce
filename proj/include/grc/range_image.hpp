// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grc/point_cloud.hpp"
#include "grc/tensor.hpp"

namespace grc {

struct ProjectionConfig {
  int height = 64;
  int width = 512;
  double fov_up_deg = 3.0;
  double fov_down_deg = -25.0;

  void validate() const;
};

struct Pixel {
  int u = 0;  // column
  int v = 0;  // row
  bool operator==(const Pixel&) const = default;
};

/// Pixel of a point, or nullopt for the origin and for pitches outside the
/// vertical field of view. Azimuth wraps, so every yaw has a column.
std::optional<Pixel> project_point(const Point& p, const ProjectionConfig& config);

struct RangeImage {
  ProjectionConfig config;
  std::vector<double> reflectance;   // [H*W], 0 where empty
  std::vector<double> range;         // [H*W], 0 where empty
  std::vector<std::uint8_t> mask;    // [H*W]
  std::vector<std::int64_t> point_index;  // [H*W], -1 where empty
  std::size_t skipped_origin = 0;
  std::size_t outside_fov = 0;

  int height() const { return config.height; }
  int width() const { return config.width; }
  std::size_t pixel(int u, int v) const { return static_cast<std::size_t>(v) * config.width + u; }
  std::size_t valid_count() const;

  /// Source point of a pixel; nullopt when the pixel holds no return.
  /// Throws DomainError for coordinates outside the image.
  std::optional<std::size_t> unproject(int u, int v) const;
};

/// When several points land on one pixel the nearest is kept.
RangeImage spherical_project(const PointCloud& cloud, const ProjectionConfig& config);

/// Two-channel encoder input [H*W x 2], one row per pixel: reflectance
/// standardized by the mean and standard deviation of the valid pixels (0 at
/// empty pixels), and the validity mask.
Tensor range_input(const RangeImage& img);

/// A feature cell at total stride s covers an s x s pixel block; it is valid
/// when any pixel in the block is. Result is [ceil(H/s) * ceil(W/s)].
std::vector<std::uint8_t> cell_mask(const RangeImage& img, int stride);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Pixel value is
/// round(clamp(value / value_max, 0, 1) * 65535).
std::string to_pgm16(const std::vector<double>& values, int height, int width, double value_max);

}  // namespace grc
