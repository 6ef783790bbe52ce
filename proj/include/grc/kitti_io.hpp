// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "grc/bytes.hpp"
#include "grc/point_cloud.hpp"

namespace grc {

struct ParseStats {
  std::size_t negative_reflectance_clamped = 0;
};

/// KITTI velodyne scan: packed little-endian float32 (x, y, z, r) records.
/// Negative reflectance is clamped to 0 and counted in `stats`.
PointCloud parse_kitti_bin(std::span<const std::byte> bytes, ParseStats* stats = nullptr);
Bytes write_kitti_bin(const PointCloud& cloud);

/// Raw semantic id -> training id. Ids missing from the table map to
/// `unmapped`.
struct ClassMap {
  std::map<std::uint16_t, int> table;
  int unmapped = kIgnoreLabel;

  /// Maps every id to itself (and leaves ids outside [0, 65535] untouched).
  static ClassMap identity();
  bool is_identity() const { return identity_; }
  int apply(std::uint16_t raw) const;
  /// Training id -> raw id for writing labels back out.
  std::uint16_t invert(int train_id) const;

 private:
  bool identity_ = false;
};

/// KITTI .label: one u32 per point, low 16 bits semantic id, high 16 bits
/// instance id (discarded).
std::vector<int> parse_kitti_label(std::span<const std::byte> bytes, std::size_t n,
                                   const ClassMap& map = ClassMap::identity());
Bytes write_kitti_label(std::span<const int> labels, const ClassMap& map = ClassMap::identity());

PointCloud load_kitti_scan(const std::filesystem::path& bin, ParseStats* stats = nullptr);
/// Loads a scan plus its .label file, if `label` names one.
PointCloud load_kitti_scan(const std::filesystem::path& bin, const std::filesystem::path& label,
                           const ClassMap& map, ParseStats* stats = nullptr);

}  // namespace grc
