// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grc/cic.hpp"
#include "grc/model.hpp"
#include "grc/range_encoder.hpp"
#include "grc/sparse_conv.hpp"

namespace grc {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;  // finite-difference entries, for gradient checks
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  void add(CheckResult r) { checks.push_back(std::move(r)); }
};

/// Finite-difference checks of every differentiable operation and of the
/// full training loss, each at relative error < 1e-4.
SuiteReport verify_grad(std::uint64_t seed = 7);
/// Closed-form KL against Monte-Carlo estimates, plus the analytic cases.
SuiteReport verify_kl(std::uint64_t seed = 11, std::size_t pairs = 100, std::size_t samples = 1000000);
/// Back-pointer round trip and re-projection of every valid pixel.
SuiteReport verify_projection(std::uint64_t seed = 13, std::size_t points = 10000);
/// Confidence weight, attention and complementarity-loss identities.
SuiteReport verify_fusion(std::uint64_t seed = 17);
/// Sparse convolution against the dense oracle on random grids.
SuiteReport verify_sparse_conv(std::uint64_t seed = 19, std::size_t trials = 50);

/// Suite names accepted by run_suite, in order.
const std::vector<std::string>& suite_names();
/// "all" runs every suite. Without a seed each suite uses its default.
std::vector<SuiteReport> run_suite(const std::string& name, std::optional<std::uint64_t> seed = std::nullopt);

namespace oracle {

/// Dense 3x3x3 convolution over the bounding box of the grid (zero at empty
/// sites), evaluated at the sparse output keys. Returns key -> [c_out].
std::map<VoxelKey, std::vector<double>> dense_conv3d(const SparseVoxelGrid& grid, const Tensor& kernel,
                                                     const Tensor& bias, int stride);

/// Direct 3x3 depthwise convolution with the same padding rules as
/// depthwise_conv3x3, written as nested loops over a [c][h][w] array.
std::vector<double> dense_depthwise(const std::vector<double>& chw, int c, int h, int w,
                                    const std::vector<double>& kernel_tc, int stride);

struct MonteCarlo {
  double mean = 0.0;
  double standard_error = 0.0;
};
/// E_p[ln p(x) - ln q(x)] for diagonal Gaussians given as vectors.
MonteCarlo kl_monte_carlo(const std::vector<double>& mu_p, const std::vector<double>& sigma_p,
                          const std::vector<double>& mu_q, const std::vector<double>& sigma_q,
                          std::size_t samples, Rng& rng);

/// Random sparse grid inside an extent^3 box whose lowest corner is
/// `origin`; every voxel holds one point at its center.
SparseVoxelGrid random_grid(Rng& rng, int extent, std::size_t channels, double occupancy,
                            VoxelKey origin = {}, double voxel_size = 1.0);

/// Small model configuration used by gradient checks.
ModelConfig tiny_model_config();
/// Small labeled scene with ground, boxes and a reflectance-only patch.
PointCloud tiny_scene(std::uint64_t seed);

}  // namespace oracle

}  // namespace grc
