// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/cic.hpp"

#include <cmath>

#include "grc/errors.hpp"
#include "grc/ops.hpp"

namespace grc {

FeatureDistribution FeatureDistribution::select(std::span<const std::uint32_t> rows) const {
  return {gather_rows(mu, rows), gather_rows(sigma, rows)};
}

DistributionHead::DistributionHead(std::size_t c_in, std::size_t c_out, Rng& rng)
    : mu(c_in, c_out, rng), sigma(c_in, c_out, rng) {
  // Start the sigma head near softplus(0) rather than at He scale.
  auto w = sigma.weight.mutable_data();
  for (double& v : w) v *= 0.1;
}

FeatureDistribution DistributionHead::forward(const Tensor& f) const {
  if (f.rank() != 2 || f.dim(1) != mu.in_features()) {
    throw DimensionError("distribution head: input " + shape_str(f.shape()) + " for width " +
                         std::to_string(mu.in_features()));
  }
  return {mu.forward(f), add_scalar(softplus(sigma.forward(f)), sigma_floor)};
}

void DistributionHead::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  mu.collect(prefix + ".mu", out);
  sigma.collect(prefix + ".sigma", out);
}

Tensor reparameterize(const FeatureDistribution& d, const Tensor& eps) {
  if (eps.shape() != d.mu.shape()) {
    throw DimensionError("reparameterize: noise " + shape_str(eps.shape()) + " for distribution " +
                         shape_str(d.mu.shape()));
  }
  return add(d.mu, mul(eps, d.sigma));
}

Tensor standard_normal(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

FeatureDistribution standard_prior(std::size_t rows, std::size_t width) {
  return {Tensor::zeros({rows, width}), Tensor::full({rows, width}, 1.0)};
}

Tensor kl_diag_gaussian_rows(const FeatureDistribution& p, const FeatureDistribution& q) {
  const Shape& s = p.mu.shape();
  if (s.size() != 2 || p.sigma.shape() != s || q.mu.shape() != s || q.sigma.shape() != s) {
    throw DimensionError("kl: shapes " + shape_str(p.mu.shape()) + "/" + shape_str(p.sigma.shape()) + " vs " +
                         shape_str(q.mu.shape()) + "/" + shape_str(q.sigma.shape()));
  }
  const std::size_t n = s[0], c = s[1];
  const auto mp = p.mu.data(), sp = p.sigma.data(), mq = q.mu.data(), sq = q.sigma.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    if (sp[i] <= 0.0) throw DomainError("kl: non-positive sigma in p", i);
    if (sq[i] <= 0.0) throw DomainError("kl: non-positive sigma in q", i);
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t j = r * c; j < (r + 1) * c; ++j) {
      const double d = mp[j] - mq[j];
      acc += std::log(sq[j] / sp[j]) + (sp[j] * sp[j] + d * d) / (2.0 * sq[j] * sq[j]) - 0.5;
    }
    out[r] = acc;
  }
  const Tensor a = p.mu, b = p.sigma, e = q.mu, f = q.sigma;
  return Tensor::make_result({n}, std::move(out), "kl_diag_gaussian", {a, b, e, f},
                             [a, b, e, f, n, c](std::span<const double> g) {
                               const auto mp = a.data(), sp = b.data(), mq = e.data(), sq = f.data();
                               std::span<double> gmp, gsp, gmq, gsq;
                               if (a.requires_grad()) gmp = a.grad_buffer();
                               if (b.requires_grad()) gsp = b.grad_buffer();
                               if (e.requires_grad()) gmq = e.grad_buffer();
                               if (f.requires_grad()) gsq = f.grad_buffer();
                               for (std::size_t r = 0; r < n; ++r) {
                                 const double gr = g[r];
                                 for (std::size_t j = r * c; j < (r + 1) * c; ++j) {
                                   const double d = mp[j] - mq[j];
                                   const double inv_q2 = 1.0 / (sq[j] * sq[j]);
                                   if (!gmp.empty()) gmp[j] += gr * d * inv_q2;
                                   if (!gmq.empty()) gmq[j] -= gr * d * inv_q2;
                                   if (!gsp.empty()) gsp[j] += gr * (sp[j] * inv_q2 - 1.0 / sp[j]);
                                   if (!gsq.empty())
                                     gsq[j] += gr * (1.0 / sq[j] - (sp[j] * sp[j] + d * d) * inv_q2 / sq[j]);
                                 }
                               }
                             });
}

Tensor kl_diag_gaussian(const FeatureDistribution& p, const FeatureDistribution& q) {
  return sum_all(kl_diag_gaussian_rows(p, q));
}

PairedSites pair_sites(const SparseVoxelGrid& geo, const ProjectionConfig& projection, int stride,
                       std::span<const std::uint8_t> valid_cells) {
  if (stride < 1) throw ConfigError("pair_sites: stride must be positive");
  const int w = (projection.width + stride - 1) / stride;
  const int h = (projection.height + stride - 1) / stride;
  if (valid_cells.size() != static_cast<std::size_t>(h) * w) {
    throw DimensionError("pair_sites: " + std::to_string(valid_cells.size()) + " cell flags for a " +
                         std::to_string(h) + "x" + std::to_string(w) + " feature map");
  }
  PairedSites pairs;
  for (std::size_t r = 0; r < geo.size(); ++r) {
    const auto& rp = geo.rep_points[r];
    const auto px = project_point({rp[0], rp[1], rp[2], 0.0}, projection);
    if (!px) continue;
    const std::size_t cell = static_cast<std::size_t>(px->v / stride) * w + px->u / stride;
    if (!valid_cells[cell]) continue;
    pairs.voxel_rows.push_back(static_cast<std::uint32_t>(r));
    pairs.cells.push_back(static_cast<std::uint32_t>(cell));
  }
  return pairs;
}

Tensor cic_loss(const PairedSites& pairs, const FeatureDistribution& geo, const FeatureDistribution& ref,
                double tau, std::size_t* empty_pairs) {
  if (!(tau > 0.0)) throw ConfigError("cic_loss: tau must be positive");
  if (pairs.empty()) {
    if (empty_pairs) ++*empty_pairs;
    return Tensor::scalar(0.0);
  }
  if (geo.width() != ref.width()) {
    throw DimensionError("cic_loss: geometric width " + std::to_string(geo.width()) +
                         " differs from reflectance width " + std::to_string(ref.width()));
  }
  const FeatureDistribution g = geo.select(pairs.voxel_rows);
  const FeatureDistribution r = ref.select(pairs.cells);
  const FeatureDistribution prior = standard_prior(pairs.size(), geo.width());
  auto clip = [tau](const Tensor& kl) { return std::isinf(tau) ? kl : clamp_max(kl, tau); };
  const Tensor prior_terms = add(kl_diag_gaussian_rows(g, prior), kl_diag_gaussian_rows(r, prior));
  const Tensor cross_terms = add(clip(kl_diag_gaussian_rows(g, r)), clip(kl_diag_gaussian_rows(r, g)));
  return mean_all(sub(prior_terms, cross_terms));
}

}  // namespace grc
