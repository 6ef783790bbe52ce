// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grc/cic.hpp"
#include "grc/nn.hpp"

namespace grc {

/// Row-wise confidence fusion of two distributions of equal shape [n x c]:
///   alpha = sigmoid(1/mean(sigma_geo) - 1/mean(sigma_ref))
///   out   = alpha * mu_geo + (1 - alpha) * mu_ref
/// The sigmoid of the difference is the two-way softmax of the inverse mean
/// sigmas, so it stays finite however small a sigma gets.
struct LocalFusion {
  Tensor fused;  // [n x c]
  Tensor alpha;  // [n]
};
LocalFusion local_fuse(const FeatureDistribution& geo, const FeatureDistribution& ref);

/// Scalar form of alpha, for checks against the formula.
double fusion_alpha(double sigma_geo_mean, double sigma_ref_mean);

/// Multi-head scaled dot-product attention with q/k/v/o projections.
struct AttentionParams {
  std::size_t heads = 4;
  Linear q, k, v, o;

  AttentionParams() = default;
  AttentionParams(std::size_t width, std::size_t heads, Rng& rng);

  std::size_t width() const { return q.in_features(); }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// queries [a x c] attend over context [b x c]. Entries of `mask` that are 0
/// get zero weight. When `weights` is given it receives one [a x b] matrix
/// per head. A context with every entry masked raises DataError.
Tensor cross_attention(const Tensor& queries, const Tensor& context, const AttentionParams& params,
                       std::span<const std::uint8_t> mask = {}, std::vector<Tensor>* weights = nullptr);

/// Two-stage funnel: tokens = CA(Q, M_ref, mask), then CA(M_geo, tokens).
Tensor global_fuse(const Tensor& m_geo, const Tensor& m_ref, const Tensor& queries,
                   const AttentionParams& stage1, const AttentionParams& stage2,
                   std::span<const std::uint8_t> ref_mask);

/// M = F + ReLU(F W + b). W and b start at zero, so M = F at initialization.
struct MProjection {
  Linear layer;

  MProjection() = default;
  explicit MProjection(std::size_t width) : layer(Linear::zeros(width, width)) {}

  Tensor forward(const Tensor& f) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Channelwise [F_local | F_global].
Tensor concat_features(const Tensor& local, const Tensor& global);

}  // namespace grc
