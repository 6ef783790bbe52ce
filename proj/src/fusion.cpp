// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/fusion.hpp"

#include <cmath>

#include "grc/errors.hpp"
#include "grc/ops.hpp"

namespace grc {

LocalFusion local_fuse(const FeatureDistribution& geo, const FeatureDistribution& ref) {
  if (geo.mu.shape() != ref.mu.shape() || geo.sigma.shape() != geo.mu.shape() ||
      ref.sigma.shape() != ref.mu.shape()) {
    throw DimensionError("local_fuse: geometric " + shape_str(geo.mu.shape()) + " vs reflectance " +
                         shape_str(ref.mu.shape()));
  }
  const std::size_t n = geo.rows();
  const Tensor ones = Tensor::full({n}, 1.0);
  const Tensor inv_geo = div(ones, reduce(ReduceOp::kMean, geo.sigma, 1));
  const Tensor inv_ref = div(ones, reduce(ReduceOp::kMean, ref.sigma, 1));
  const Tensor z = sub(inv_geo, inv_ref);
  LocalFusion out;
  out.alpha = sigmoid(z);
  out.fused = add(scale_rows(geo.mu, out.alpha), scale_rows(ref.mu, sigmoid(neg(z))));
  return out;
}

double fusion_alpha(double sigma_geo_mean, double sigma_ref_mean) {
  const double z = 1.0 / sigma_geo_mean - 1.0 / sigma_ref_mean;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

AttentionParams::AttentionParams(std::size_t width, std::size_t heads, Rng& rng)
    : heads(heads), q(width, width, rng), k(width, width, rng), v(width, width, rng), o(width, width, rng) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  // Unit-variance projections keep initial logits O(1).
  const double shrink = std::sqrt(0.5);
  for (Linear* l : {&q, &k, &v, &o})
    for (double& x : l->weight.mutable_data()) x *= shrink;
}

void AttentionParams::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  o.collect(prefix + ".o", out);
}

Tensor cross_attention(const Tensor& queries, const Tensor& context, const AttentionParams& params,
                       std::span<const std::uint8_t> mask, std::vector<Tensor>* weights) {
  const std::size_t c = params.width();
  if (queries.rank() != 2 || context.rank() != 2 || queries.dim(1) != c || context.dim(1) != c) {
    throw DimensionError("cross_attention: queries " + shape_str(queries.shape()) + ", context " +
                         shape_str(context.shape()) + ", model width " + std::to_string(c));
  }
  if (!mask.empty() && mask.size() != context.dim(0)) {
    throw DimensionError("cross_attention: mask has " + std::to_string(mask.size()) + " entries for " +
                         std::to_string(context.dim(0)) + " context rows");
  }
  if (params.heads == 0 || c % params.heads != 0) throw ConfigError("cross_attention: bad head count");
  const std::size_t d = c / params.heads;
  const Tensor q = params.q.forward(queries);
  const Tensor k = params.k.forward(context);
  const Tensor v = params.v.forward(context);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(d));
  if (weights) weights->clear();
  Tensor heads_out;
  for (std::size_t h = 0; h < params.heads; ++h) {
    const Tensor qh = params.heads == 1 ? q : slice_cols(q, h * d, d);
    const Tensor kh = params.heads == 1 ? k : slice_cols(k, h * d, d);
    const Tensor vh = params.heads == 1 ? v : slice_cols(v, h * d, d);
    const Tensor w = softmax_lastaxis(scale(matmul(qh, transpose(kh)), scale_factor), mask);
    if (weights) weights->push_back(w);
    const Tensor oh = matmul(w, vh);
    heads_out = h == 0 ? oh : concat_cols(heads_out, oh);
  }
  return params.o.forward(heads_out);
}

Tensor global_fuse(const Tensor& m_geo, const Tensor& m_ref, const Tensor& queries,
                   const AttentionParams& stage1, const AttentionParams& stage2,
                   std::span<const std::uint8_t> ref_mask) {
  const Tensor tokens = cross_attention(queries, m_ref, stage1, ref_mask);
  return cross_attention(m_geo, tokens, stage2);
}

Tensor MProjection::forward(const Tensor& f) const {
  if (f.rank() != 2 || f.dim(1) != layer.in_features()) {
    throw DimensionError("m_projection: input " + shape_str(f.shape()) + " for width " +
                         std::to_string(layer.in_features()));
  }
  return add(f, relu(layer.forward(f)));
}

void MProjection::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  layer.collect(prefix, out);
}

Tensor concat_features(const Tensor& local, const Tensor& global) { return concat_cols(local, global); }

}  // namespace grc
