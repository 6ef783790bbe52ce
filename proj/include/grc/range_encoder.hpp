// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grc/nn.hpp"
#include "grc/range_image.hpp"

namespace grc {

/// Image feature map stored channel-last: `data` is [h*w x c], row y*w + x.
struct FeatureMap {
  Tensor data;
  int h = 0;
  int w = 0;

  std::size_t channels() const { return data.dim(1); }
};

/// Depthwise 3x3 convolution, one filter per channel; kernel is [9 x c] with
/// tap (dy+1)*3 + (dx+1). Output cell (y, x) is centered on input pixel
/// (y*stride, x*stride). Columns wrap around; rows outside the image read 0.
FeatureMap depthwise_conv3x3(const FeatureMap& x, const Tensor& kernel, int stride);

/// Normalizes each channel over all h*w positions, then applies gamma, beta.
Tensor instance_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

struct IRStageConfig {
  std::size_t channels = 16;
  std::size_t expansion = 2;
  int stride = 1;
};

struct InvertedResidualBlock {
  Linear expand;          // c_in -> t*c_in
  Tensor dw_kernel;       // [9 x t*c_in]
  Tensor norm1_gamma, norm1_beta;
  Linear project;         // t*c_in -> c_out
  Tensor norm2_gamma, norm2_beta;
  int stride = 1;
  bool skip = false;      // only when c_in == c_out and stride == 1
  bool use_norm = true;
  double eps = 1e-5;

  InvertedResidualBlock() = default;
  InvertedResidualBlock(std::size_t c_in, const IRStageConfig& stage, Rng& rng);

  std::size_t in_channels() const { return expand.in_features(); }
  std::size_t out_channels() const { return project.out_features(); }

  /// expand -> depthwise -> norm -> ReLU6 -> project -> norm (+ input).
  FeatureMap forward(const FeatureMap& x) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

struct RefEncoderConfig {
  std::size_t in_channels = 2;  // standardized reflectance and validity mask
  std::vector<IRStageConfig> stages{{16, 4, 2}, {16, 2, 1}, {32, 2, 2}, {32, 2, 1}};

  int total_stride() const;
  std::size_t out_channels() const { return stages.back().channels; }
  void validate() const;
};

struct RefEncoder {
  std::vector<InvertedResidualBlock> blocks;
  int total_stride = 1;

  RefEncoder() = default;
  RefEncoder(const RefEncoderConfig& config, Rng& rng);

  FeatureMap forward(const FeatureMap& input) const;
  /// Encodes a projected scan; output is [ceil(H/s) * ceil(W/s) x c].
  FeatureMap forward(const RangeImage& img) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

}  // namespace grc
