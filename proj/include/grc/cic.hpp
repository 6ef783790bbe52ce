// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "grc/nn.hpp"
#include "grc/range_image.hpp"
#include "grc/voxel_grid.hpp"

namespace grc {

/// Diagonal Gaussians, one per row: mu and sigma are both [n x c].
struct FeatureDistribution {
  Tensor mu;
  Tensor sigma;

  std::size_t rows() const { return mu.dim(0); }
  std::size_t width() const { return mu.dim(1); }
  FeatureDistribution select(std::span<const std::uint32_t> rows) const;
};

/// mu = affine(f), sigma = softplus(affine(f)) + sigma_floor.
struct DistributionHead {
  Linear mu;
  Linear sigma;
  double sigma_floor = 1e-4;

  DistributionHead() = default;
  DistributionHead(std::size_t c_in, std::size_t c_out, Rng& rng);

  FeatureDistribution forward(const Tensor& f) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// m = mu + eps * sigma, with eps the same shape as mu.
Tensor reparameterize(const FeatureDistribution& d, const Tensor& eps);
/// Standard normal noise drawn from `rng`.
Tensor standard_normal(Shape shape, Rng& rng);

/// KL(p || q) for each row, as a vector [n]:
///   sum_i ln(sq_i / sp_i) + (sp_i^2 + (mp_i - mq_i)^2) / (2 sq_i^2) - 1/2.
/// Non-positive sigmas raise DomainError; NaN propagates to the result.
Tensor kl_diag_gaussian_rows(const FeatureDistribution& p, const FeatureDistribution& q);
/// Sum of the row divergences.
Tensor kl_diag_gaussian(const FeatureDistribution& p, const FeatureDistribution& q);
/// Rows of N(0, I) with the given shape.
FeatureDistribution standard_prior(std::size_t rows, std::size_t width);

/// Links voxel rows of the geometric grid to reflectance feature cells.
struct PairedSites {
  std::vector<std::uint32_t> voxel_rows;
  std::vector<std::uint32_t> cells;

  std::size_t size() const { return voxel_rows.size(); }
  bool empty() const { return voxel_rows.empty(); }
};

/// Each voxel's representative point is projected, its pixel divided by
/// `stride` and floored. Voxels outside the field of view or on an invalid
/// cell stay unpaired.
PairedSites pair_sites(const SparseVoxelGrid& geo, const ProjectionConfig& projection, int stride,
                       std::span<const std::uint8_t> valid_cells);

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

/// Mean over pairs of
///   KL(g || N(0,I)) + KL(r || N(0,I)) - min(KL(g || r), tau) - min(KL(r || g), tau)
/// where g are the geometric rows and r the reflectance rows named by `pairs`.
/// An empty pair set returns 0 and increments `*empty_pairs` if given.
Tensor cic_loss(const PairedSites& pairs, const FeatureDistribution& geo, const FeatureDistribution& ref,
                double tau = 10.0, std::size_t* empty_pairs = nullptr);

}  // namespace grc
