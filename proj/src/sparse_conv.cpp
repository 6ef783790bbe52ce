// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/sparse_conv.hpp"

#include <algorithm>
#include <cmath>

#include "grc/errors.hpp"
#include "grc/ops.hpp"

namespace grc {

VoxelKey tap_offset(int tap) { return {tap / 9 - 1, (tap / 3) % 3 - 1, tap % 3 - 1}; }

namespace {

VoxelKey halve(const VoxelKey& k) { return {k.i >> 1, k.j >> 1, k.k >> 1}; }

}  // namespace

Rulebook build_rulebook(const SparseVoxelGrid& grid, int stride) {
  if (stride != 1 && stride != 2) throw ConfigError("sparse conv: stride must be 1 or 2");
  Rulebook rb;
  const std::size_t v = grid.size();
  rb.parent.resize(v);
  if (stride == 1) {
    rb.out_keys = grid.keys;
    for (std::size_t r = 0; r < v; ++r) rb.parent[r] = static_cast<std::uint32_t>(r);
    for (int t = 0; t < kKernelTaps; ++t) {
      const VoxelKey d = tap_offset(t);
      for (std::size_t o = 0; o < v; ++o) {
        if (auto in = grid.find(grid.keys[o] + d)) rb.pairs[t].emplace_back(*in, static_cast<std::uint32_t>(o));
      }
    }
    return rb;
  }
  rb.out_keys.reserve(v);
  for (const auto& k : grid.keys) rb.out_keys.push_back(halve(k));
  std::sort(rb.out_keys.begin(), rb.out_keys.end());
  rb.out_keys.erase(std::unique(rb.out_keys.begin(), rb.out_keys.end()), rb.out_keys.end());
  VoxelIndex out_index;
  out_index.reserve(rb.out_keys.size());
  for (std::size_t o = 0; o < rb.out_keys.size(); ++o) out_index.emplace(rb.out_keys[o], static_cast<std::uint32_t>(o));
  for (std::size_t r = 0; r < v; ++r) rb.parent[r] = out_index.at(halve(grid.keys[r]));
  for (int t = 0; t < kKernelTaps; ++t) {
    const VoxelKey d = tap_offset(t);
    for (std::size_t o = 0; o < rb.out_keys.size(); ++o) {
      const VoxelKey& q = rb.out_keys[o];
      const VoxelKey src{2 * q.i + d.i, 2 * q.j + d.j, 2 * q.k + d.k};
      if (auto in = grid.find(src)) rb.pairs[t].emplace_back(*in, static_cast<std::uint32_t>(o));
    }
  }
  return rb;
}

namespace {

Tensor apply_rulebook(const Tensor& x, const Tensor& kernel, const Rulebook& rb) {
  const std::size_t cin = kernel.dim(1), cout = kernel.dim(2);
  const std::size_t v_out = rb.out_keys.size();
  const auto xd = x.data();
  const auto wd = kernel.data();
  std::vector<double> out(v_out * cout, 0.0);
  for (int t = 0; t < kKernelTaps; ++t) {
    const double* w = wd.data() + t * cin * cout;
    for (const auto& [i, o] : rb.pairs[t]) {
      const double* xi = xd.data() + i * cin;
      double* yo = out.data() + o * cout;
      for (std::size_t a = 0; a < cin; ++a) {
        const double xa = xi[a];
        if (xa == 0.0) continue;
        const double* wr = w + a * cout;
        for (std::size_t b = 0; b < cout; ++b) yo[b] += xa * wr[b];
      }
    }
  }
  auto pairs = std::make_shared<const Rulebook>(rb);
  return Tensor::make_result(
      {v_out, cout}, std::move(out), "sparse_conv3d", {x, kernel},
      [x, kernel, pairs, cin, cout](std::span<const double> g) {
        const auto xd = x.data();
        const auto wd = kernel.data();
        if (x.requires_grad()) {
          auto gx = x.grad_buffer();
          for (int t = 0; t < kKernelTaps; ++t) {
            const double* w = wd.data() + t * cin * cout;
            for (const auto& [i, o] : pairs->pairs[t]) {
              const double* go = g.data() + o * cout;
              double* gi = gx.data() + i * cin;
              for (std::size_t a = 0; a < cin; ++a) {
                const double* wr = w + a * cout;
                double acc = 0.0;
                for (std::size_t b = 0; b < cout; ++b) acc += go[b] * wr[b];
                gi[a] += acc;
              }
            }
          }
        }
        if (kernel.requires_grad()) {
          auto gw = kernel.grad_buffer();
          for (int t = 0; t < kKernelTaps; ++t) {
            double* w = gw.data() + t * cin * cout;
            for (const auto& [i, o] : pairs->pairs[t]) {
              const double* xi = xd.data() + i * cin;
              const double* go = g.data() + o * cout;
              for (std::size_t a = 0; a < cin; ++a) {
                const double xa = xi[a];
                if (xa == 0.0) continue;
                double* wr = w + a * cout;
                for (std::size_t b = 0; b < cout; ++b) wr[b] += xa * go[b];
              }
            }
          }
        }
      });
}

}  // namespace

SparseVoxelGrid sparse_conv3d(const SparseVoxelGrid& grid, const Tensor& kernel, const Tensor& bias,
                              int stride) {
  if (kernel.rank() != 3 || kernel.dim(0) != kKernelTaps) {
    throw DimensionError("sparse_conv3d: kernel must be [27 x c_in x c_out], got " + shape_str(kernel.shape()));
  }
  if (grid.channels() != kernel.dim(1)) {
    throw DimensionError("sparse_conv3d: grid has " + std::to_string(grid.channels()) +
                         " channels, kernel expects " + std::to_string(kernel.dim(1)));
  }
  if (bias.numel() != kernel.dim(2)) {
    throw DimensionError("sparse_conv3d: bias " + shape_str(bias.shape()) + " for " +
                         std::to_string(kernel.dim(2)) + " output channels");
  }
  const Rulebook rb = build_rulebook(grid, stride);

  SparseVoxelGrid out;
  out.voxel_size = grid.voxel_size * stride;
  out.stride = grid.stride * stride;
  out.keys = rb.out_keys;
  out.reindex();
  out.features = add(apply_rulebook(grid.features, kernel, rb), bias);

  const std::size_t v_out = out.size();
  out.member_counts.assign(v_out, 0);
  std::vector<std::array<double, 3>> sums(v_out, {0.0, 0.0, 0.0});
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const std::uint32_t o = rb.parent[r];
    const double w = grid.member_counts[r];
    out.member_counts[o] += grid.member_counts[r];
    for (int a = 0; a < 3; ++a) sums[o][a] += w * grid.rep_points[r][a];
  }
  out.rep_points.resize(v_out);
  for (std::size_t o = 0; o < v_out; ++o)
    for (int a = 0; a < 3; ++a) out.rep_points[o][a] = sums[o][a] / out.member_counts[o];
  out.point_to_voxel.resize(grid.point_to_voxel.size());
  for (std::size_t p = 0; p < grid.point_to_voxel.size(); ++p) out.point_to_voxel[p] = rb.parent[grid.point_to_voxel[p]];
  return out;
}

RunningNorm::RunningNorm(std::size_t channels)
    : gamma(constant_parameter({channels}, 1.0)),
      beta(zero_parameter({channels})),
      running_mean(Tensor::zeros({channels})),
      running_var(Tensor::full({channels}, 1.0)),
      updates(Tensor::zeros({1})) {}

Tensor RunningNorm::forward(const Tensor& x, bool update_stats) const {
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.numel() != c) throw DimensionError("norm: " + std::to_string(c) + " channels, expected " + std::to_string(gamma.numel()));
  if (update_stats) {
    auto count = Tensor(updates).mutable_data();
    const double w = std::max(momentum, 1.0 / (count[0] + 1.0));
    count[0] += 1.0;
    const auto xd = x.data();
    auto mean = Tensor(running_mean).mutable_data();
    auto var = Tensor(running_var).mutable_data();
    for (std::size_t j = 0; j < c; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += xd[i * c + j];
      m /= n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (xd[i * c + j] - m) * (xd[i * c + j] - m);
      s /= n;
      mean[j] = (1.0 - w) * mean[j] + w * m;
      var[j] = (1.0 - w) * var[j] + w * s;
    }
  }
  std::vector<double> inv_std(c), mean(c);
  for (std::size_t j = 0; j < c; ++j) {
    inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
    mean[j] = running_mean[j];
  }
  // y = x * a + (beta - mean * a) with a = gamma / sqrt(var + eps).
  const Tensor a = mul(gamma, Tensor::from({c}, std::move(inv_std)));
  const Tensor shift = sub(beta, mul(a, Tensor::from({c}, std::move(mean))));
  return add(mul(x, a), shift);
}

void RunningNorm::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                          std::vector<NamedTensor>& buffers) const {
  params.push_back({prefix + ".gamma", gamma});
  params.push_back({prefix + ".beta", beta});
  buffers.push_back({prefix + ".running_mean", running_mean});
  buffers.push_back({prefix + ".running_var", running_var});
  buffers.push_back({prefix + ".updates", updates});
}

SparseConvBlock::SparseConvBlock(std::size_t c_in, std::size_t c_out, int stride, Rng& rng)
    : kernel(normal_parameter({kKernelTaps, c_in, c_out}, std::sqrt(2.0 / (kKernelTaps * c_in)), rng)),
      bias(zero_parameter({c_out})),
      stride(stride),
      norm(c_out) {}

SparseVoxelGrid SparseConvBlock::forward(const SparseVoxelGrid& grid, bool update_stats) const {
  SparseVoxelGrid out = sparse_conv3d(grid, kernel, bias, stride);
  if (use_norm) out.features = norm.forward(out.features, update_stats);
  if (relu) out.features = grc::relu(out.features);
  return out;
}

void SparseConvBlock::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                              std::vector<NamedTensor>& buffers) const {
  params.push_back({prefix + ".kernel", kernel});
  params.push_back({prefix + ".bias", bias});
  if (use_norm) norm.collect(prefix + ".norm", params, buffers);
}

int GeoEncoderConfig::total_stride() const {
  int s = 1;
  for (int st : strides) s *= st;
  return s;
}

void GeoEncoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("geo encoder: at least one block is required");
  if (channels.size() != strides.size()) {
    throw ConfigError("geo encoder: " + std::to_string(channels.size()) + " channel entries but " +
                      std::to_string(strides.size()) + " strides");
  }
  if (in_channels == 0) throw ConfigError("geo encoder: in_channels must be positive");
  for (std::size_t c : channels)
    if (c == 0) throw ConfigError("geo encoder: channel widths must be positive");
  for (int s : strides)
    if (s != 1 && s != 2) throw ConfigError("geo encoder: strides must be 1 or 2");
}

GeoEncoder::GeoEncoder(const GeoEncoderConfig& config, Rng& rng) {
  config.validate();
  std::size_t c_in = config.in_channels;
  for (std::size_t b = 0; b < config.channels.size(); ++b) {
    blocks.emplace_back(c_in, config.channels[b], config.strides[b], rng);
    c_in = config.channels[b];
  }
}

std::vector<SparseVoxelGrid> GeoEncoder::forward_all(const SparseVoxelGrid& input, bool update_stats) const {
  std::vector<SparseVoxelGrid> outs;
  outs.reserve(blocks.size());
  const SparseVoxelGrid* cur = &input;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (cur->channels() != blocks[b].in_channels()) {
      throw ConfigError("geo encoder: block " + std::to_string(b) + " expects " +
                        std::to_string(blocks[b].in_channels()) + " channels, got " +
                        std::to_string(cur->channels()));
    }
    outs.push_back(blocks[b].forward(*cur, update_stats));
    cur = &outs.back();
  }
  return outs;
}

SparseVoxelGrid GeoEncoder::forward(const SparseVoxelGrid& input, bool update_stats) const {
  return forward_all(input, update_stats).back();
}

void GeoEncoder::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                         std::vector<NamedTensor>& buffers) const {
  for (std::size_t b = 0; b < blocks.size(); ++b)
    blocks[b].collect(prefix + ".block" + std::to_string(b), params, buffers);
}

}  // namespace grc
