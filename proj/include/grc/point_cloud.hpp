// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace grc {

/// Label for points that take no part in training or scoring.
inline constexpr int kIgnoreLabel = 255;
/// Reserved label of injected weather clutter; excluded from the confusion
/// matrix like kIgnoreLabel.
inline constexpr int kNoiseLabel = 254;

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;  // reflectance, unitless, >= 0

  double range() const { return std::sqrt(x * x + y * y + z * z); }
};

struct PointCloud {
  std::vector<Point> points;
  std::vector<int> labels;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return !labels.empty(); }

  /// Throws DataError when coordinates are non-finite, reflectance is negative
  /// or non-finite, or the label count is wrong.
  void validate() const;
};

}  // namespace grc
