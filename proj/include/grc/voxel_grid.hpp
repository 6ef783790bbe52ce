// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "grc/point_cloud.hpp"
#include "grc/tensor.hpp"

namespace grc {

struct VoxelKey {
  std::int32_t i = 0, j = 0, k = 0;
  auto operator<=>(const VoxelKey&) const = default;
  VoxelKey operator+(const VoxelKey& o) const { return {i + o.i, j + o.j, k + o.k}; }
};

/// Spatial hash of Teschner et al. (primes 73856093, 19349669, 83492791,
/// combined by xor), finished with the SplitMix64 mixer so that neighboring
/// keys spread over all buckets.
struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& key) const noexcept;
};

using VoxelIndex = std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash>;

/// Occupied voxels with features. Rows are ordered by key, so two grids built
/// from the same points in any order are identical.
struct SparseVoxelGrid {
  double voxel_size = 0.05;  // edge length at this resolution, meters
  int stride = 1;            // relative to the voxelization resolution
  std::vector<VoxelKey> keys;
  Tensor features;  // [V x c]
  std::vector<std::array<double, 3>> rep_points;
  std::vector<std::uint32_t> member_counts;  // points per voxel
  std::vector<std::uint32_t> point_to_voxel;
  VoxelIndex index;

  std::size_t size() const { return keys.size(); }
  std::size_t channels() const { return features.dim(1); }
  std::optional<std::uint32_t> find(const VoxelKey& key) const;

  /// Rebuilds `index` from `keys`.
  void reindex();
};

VoxelKey voxel_key(const Point& p, double voxel_size);

/// Features are the mean member offset from the voxel center in voxel units,
/// in [-0.5, 0.5]; `with_reflectance` appends the mean member reflectance as a
/// fourth channel. Throws DataError for an empty cloud.
SparseVoxelGrid voxelize(const PointCloud& cloud, double voxel_size, bool with_reflectance = false);

/// Per-point features gathered from each point's voxel row.
Tensor devoxelize(const SparseVoxelGrid& grid, std::size_t n);

}  // namespace grc
