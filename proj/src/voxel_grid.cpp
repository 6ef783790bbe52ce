// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/voxel_grid.hpp"

#include <algorithm>
#include <cmath>

#include "grc/errors.hpp"
#include "grc/ops.hpp"
#include "grc/rng.hpp"

namespace grc {

std::size_t VoxelKeyHash::operator()(const VoxelKey& key) const noexcept {
  const std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.i)) * 73856093ULL) ^
                          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.j)) * 19349669ULL) ^
                          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.k)) * 83492791ULL);
  return static_cast<std::size_t>(Rng::mix(h));
}

std::optional<std::uint32_t> SparseVoxelGrid::find(const VoxelKey& key) const {
  auto it = index.find(key);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

void SparseVoxelGrid::reindex() {
  index.clear();
  index.reserve(keys.size());
  for (std::size_t r = 0; r < keys.size(); ++r) index.emplace(keys[r], static_cast<std::uint32_t>(r));
}

VoxelKey voxel_key(const Point& p, double voxel_size) {
  auto cell = [voxel_size](double v) {
    const double f = std::floor(v / voxel_size);
    if (!(std::abs(f) < 2.0e9)) throw DataError("voxelize: coordinate outside the voxel index range");
    return static_cast<std::int32_t>(f);
  };
  return {cell(p.x), cell(p.y), cell(p.z)};
}

SparseVoxelGrid voxelize(const PointCloud& cloud, double voxel_size, bool with_reflectance) {
  if (!(voxel_size > 0.0)) throw ConfigError("voxelize: voxel_size must be positive");
  if (cloud.empty()) throw DataError("voxelize: empty point cloud");
  const std::size_t n = cloud.size();

  std::vector<VoxelKey> point_keys(n);
  for (std::size_t p = 0; p < n; ++p) point_keys[p] = voxel_key(cloud.points[p], voxel_size);

  SparseVoxelGrid grid;
  grid.voxel_size = voxel_size;
  grid.keys = point_keys;
  std::sort(grid.keys.begin(), grid.keys.end());
  grid.keys.erase(std::unique(grid.keys.begin(), grid.keys.end()), grid.keys.end());
  grid.reindex();

  const std::size_t v = grid.size();
  const std::size_t c = with_reflectance ? 4 : 3;
  grid.point_to_voxel.resize(n);
  grid.member_counts.assign(v, 0);
  std::vector<std::array<double, 4>> sums(v, {0.0, 0.0, 0.0, 0.0});
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t row = grid.index.at(point_keys[p]);
    grid.point_to_voxel[p] = row;
    ++grid.member_counts[row];
    const Point& pt = cloud.points[p];
    sums[row][0] += pt.x;
    sums[row][1] += pt.y;
    sums[row][2] += pt.z;
    sums[row][3] += pt.r;
  }

  std::vector<double> features(v * c);
  grid.rep_points.resize(v);
  for (std::size_t r = 0; r < v; ++r) {
    const double count = grid.member_counts[r];
    const VoxelKey& key = grid.keys[r];
    const std::array<std::int32_t, 3> idx{key.i, key.j, key.k};
    for (int a = 0; a < 3; ++a) {
      double centroid = sums[r][a] / count;
      // Rounding in the sum can push a centroid a hair outside the cell.
      const double lo = idx[a] * voxel_size, hi = (idx[a] + 1) * voxel_size;
      centroid = std::clamp(centroid, lo, std::nextafter(hi, lo));
      grid.rep_points[r][a] = centroid;
      features[r * c + a] = std::clamp(centroid / voxel_size - (idx[a] + 0.5), -0.5, 0.5);
    }
    if (with_reflectance) features[r * c + 3] = sums[r][3] / count;
  }
  grid.features = Tensor::from({v, c}, std::move(features));
  return grid;
}

Tensor devoxelize(const SparseVoxelGrid& grid, std::size_t n) {
  if (grid.point_to_voxel.size() != n) {
    throw MappingError("devoxelize: grid maps " + std::to_string(grid.point_to_voxel.size()) +
                       " points, expected " + std::to_string(n));
  }
  return gather_rows(grid.features, grid.point_to_voxel);
}

}  // namespace grc
