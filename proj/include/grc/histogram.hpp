// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "grc/point_cloud.hpp"

namespace grc {

enum class HistField { kDistance, kReflectance };

std::string to_string(HistField field);
HistField parse_hist_field(const std::string& name);

/// Equal-width bins over [lo, hi]. A value equal to hi, or above it, lands
/// in the last bin, so counts always sum to the number of points.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

std::vector<double> field_values(const PointCloud& cloud, HistField field);

/// Bins span [0, hi], with hi defaulting to the field's maximum. Throws
/// DataError for an empty cloud.
Histogram histogram(const PointCloud& cloud, HistField field, std::size_t bins,
                    std::optional<double> hi = std::nullopt);
Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi);

/// Header "bin_lo,bin_hi,count" (plus ",frequency" when requested).
std::string histogram_csv(const Histogram& h, bool with_frequency = false);

/// Exact 1-Wasserstein distance between two empirical distributions.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// W1 between a field's values in two clouds, divided by the field's maximum
/// in `reference` so distance and reflectance shifts are comparable.
double normalized_shift(const PointCloud& reference, const PointCloud& other, HistField field);

/// Pearson chi-square statistic against equal expected counts.
double chi_square_uniform(const Histogram& h);

}  // namespace grc
