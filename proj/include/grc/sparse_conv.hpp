// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grc/nn.hpp"
#include "grc/voxel_grid.hpp"

namespace grc {

/// Offset (di, dj, dk), each in {-1, 0, 1}, has tap (di+1)*9 + (dj+1)*3 + (dk+1).
constexpr int kKernelTaps = 27;
VoxelKey tap_offset(int tap);

/// Input/output row pairs for every kernel tap.
struct Rulebook {
  std::vector<VoxelKey> out_keys;  // sorted
  std::array<std::vector<std::pair<std::uint32_t, std::uint32_t>>, kKernelTaps> pairs;
  std::vector<std::uint32_t> parent;  // input row -> output row containing it
};

/// Stride 1 keeps the occupied set (submanifold). Stride 2 maps key q to
/// floor(q / 2) and reads taps at 2q + offset, matching a dense stride-2
/// convolution with padding 1.
Rulebook build_rulebook(const SparseVoxelGrid& grid, int stride);

/// Raw convolution: kernel [27 x c_in x c_out], bias [c_out]. The returned
/// grid carries composed point_to_voxel and member-weighted rep points.
SparseVoxelGrid sparse_conv3d(const SparseVoxelGrid& grid, const Tensor& kernel, const Tensor& bias,
                              int stride);

/// Per-channel normalization with running statistics that are constants for
/// autodiff and only move when the caller asks for a statistics update.
struct RunningNorm {
  Tensor gamma;         // [c], trainable
  Tensor beta;          // [c], trainable
  Tensor running_mean;  // [c], buffer
  Tensor running_var;   // [c], buffer
  Tensor updates;       // [1], buffer: number of folded batches
  double momentum = 0.1;
  double eps = 1e-5;

  RunningNorm() = default;
  explicit RunningNorm(std::size_t channels);

  /// `update_stats` first folds this batch's row statistics into the
  /// running averages, then normalizes with the result. The first 1/momentum
  /// batches are averaged cumulatively, so the first batch sets the stats.
  Tensor forward(const Tensor& x, bool update_stats) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const;
};

struct SparseConvBlock {
  Tensor kernel;  // [27 x c_in x c_out]
  Tensor bias;    // [c_out]
  int stride = 1;
  bool relu = true;
  bool use_norm = true;
  RunningNorm norm;

  SparseConvBlock() = default;
  SparseConvBlock(std::size_t c_in, std::size_t c_out, int stride, Rng& rng);

  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t out_channels() const { return kernel.dim(2); }

  /// conv -> norm -> ReLU.
  SparseVoxelGrid forward(const SparseVoxelGrid& grid, bool update_stats = false) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const;
};

struct GeoEncoderConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> channels{16, 16, 32, 32};
  std::vector<int> strides{1, 2, 1, 2};

  int total_stride() const;
  void validate() const;
};

struct GeoEncoder {
  std::vector<SparseConvBlock> blocks;

  GeoEncoder() = default;
  GeoEncoder(const GeoEncoderConfig& config, Rng& rng);

  /// Output grid of every block, in order; back() is the encoder output.
  std::vector<SparseVoxelGrid> forward_all(const SparseVoxelGrid& input, bool update_stats = false) const;
  SparseVoxelGrid forward(const SparseVoxelGrid& input, bool update_stats = false) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const;
};

}  // namespace grc
