// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/range_encoder.hpp"

#include <cmath>
#include <memory>

#include "grc/errors.hpp"
#include "grc/ops.hpp"

namespace grc {

FeatureMap depthwise_conv3x3(const FeatureMap& x, const Tensor& kernel, int stride) {
  if (stride != 1 && stride != 2) throw ConfigError("depthwise conv: stride must be 1 or 2");
  const std::size_t c = x.channels();
  if (kernel.rank() != 2 || kernel.dim(0) != 9 || kernel.dim(1) != c) {
    throw DimensionError("depthwise conv: kernel " + shape_str(kernel.shape()) + " for " +
                         std::to_string(c) + " channels");
  }
  if (x.data.dim(0) != static_cast<std::size_t>(x.h) * x.w) {
    throw DimensionError("depthwise conv: feature rows do not match " + std::to_string(x.h) + "x" +
                         std::to_string(x.w));
  }
  const int h = x.h, w = x.w;
  const int ho = (h + stride - 1) / stride, wo = (w + stride - 1) / stride;

  // Source row of every (output cell, tap), or -1 for vertical padding.
  auto taps = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(ho) * wo * 9, -1);
  for (int y = 0; y < ho; ++y) {
    for (int xo = 0; xo < wo; ++xo) {
      for (int t = 0; t < 9; ++t) {
        const int sy = y * stride + t / 3 - 1;
        if (sy < 0 || sy >= h) continue;
        const int sx = ((xo * stride + t % 3 - 1) % w + w) % w;
        (*taps)[(static_cast<std::size_t>(y) * wo + xo) * 9 + t] = static_cast<std::int64_t>(sy) * w + sx;
      }
    }
  }

  const auto xd = x.data.data();
  const auto kd = kernel.data();
  const std::size_t cells = static_cast<std::size_t>(ho) * wo;
  std::vector<double> out(cells * c, 0.0);
  for (std::size_t o = 0; o < cells; ++o) {
    double* yo = out.data() + o * c;
    for (int t = 0; t < 9; ++t) {
      const std::int64_t s = (*taps)[o * 9 + t];
      if (s < 0) continue;
      const double* xs = xd.data() + s * c;
      const double* kt = kd.data() + t * c;
      for (std::size_t ch = 0; ch < c; ++ch) yo[ch] += xs[ch] * kt[ch];
    }
  }
  const Tensor input = x.data;
  FeatureMap result;
  result.h = ho;
  result.w = wo;
  result.data = Tensor::make_result(
      {cells, c}, std::move(out), "depthwise_conv3x3", {input, kernel},
      [input, kernel, taps, cells, c](std::span<const double> g) {
        const auto xd = input.data();
        const auto kd = kernel.data();
        const bool gx_needed = input.requires_grad(), gk_needed = kernel.requires_grad();
        std::span<double> gx, gk;
        if (gx_needed) gx = input.grad_buffer();
        if (gk_needed) gk = kernel.grad_buffer();
        for (std::size_t o = 0; o < cells; ++o) {
          const double* go = g.data() + o * c;
          for (int t = 0; t < 9; ++t) {
            const std::int64_t s = (*taps)[o * 9 + t];
            if (s < 0) continue;
            if (gx_needed) {
              double* gs = gx.data() + s * c;
              const double* kt = kd.data() + t * c;
              for (std::size_t ch = 0; ch < c; ++ch) gs[ch] += go[ch] * kt[ch];
            }
            if (gk_needed) {
              double* gt = gk.data() + t * c;
              const double* xs = xd.data() + s * c;
              for (std::size_t ch = 0; ch < c; ++ch) gt[ch] += go[ch] * xs[ch];
            }
          }
        }
      });
  return result;
}

Tensor instance_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (!(eps > 0.0)) throw ConfigError("instance norm: eps must be positive");
  if (x.rank() != 2) throw DimensionError("instance norm: expected [positions x channels], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.numel() != c || beta.numel() != c) {
    throw DimensionError("instance norm: affine parameters do not match " + std::to_string(c) + " channels");
  }
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<double> mean(c, 0.0), inv_std(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) mean[j] += xd[i * c + j];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<double> var(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xd[i * c + j] - mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(n) + eps);

  auto xhat = std::make_shared<std::vector<double>>(n * c);
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xd[i * c + j] - mean[j]) * inv_std[j];
      (*xhat)[i * c + j] = h;
      out[i * c + j] = h * gd[j] + bd[j];
    }
  return Tensor::make_result(
      {n, c}, std::move(out), "instance_norm2d", {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std = std::move(inv_std), n, c](std::span<const double> g) {
        const auto gd = gamma.data();
        std::vector<double> sum_g(c, 0.0), sum_gh(c, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c; ++j) {
            sum_g[j] += g[i * c + j];
            sum_gh[j] += g[i * c + j] * (*xhat)[i * c + j];
          }
        if (gamma.requires_grad()) {
          auto gg = gamma.grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gh[j];
        }
        if (beta.requires_grad()) {
          auto gb = beta.grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
        }
        if (x.requires_grad()) {
          auto gx = x.grad_buffer();
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              // d/dx of the normalized value, with dxhat = g * gamma.
              const double k = gd[j] * inv_std[j];
              gx[i * c + j] += k * (g[i * c + j] - inv_n * sum_g[j] - (*xhat)[i * c + j] * inv_n * sum_gh[j]);
            }
        }
      });
}

InvertedResidualBlock::InvertedResidualBlock(std::size_t c_in, const IRStageConfig& stage, Rng& rng)
    : expand(c_in, c_in * stage.expansion, rng),
      dw_kernel(normal_parameter({9, c_in * stage.expansion}, std::sqrt(2.0 / 9.0), rng)),
      norm1_gamma(constant_parameter({c_in * stage.expansion}, 1.0)),
      norm1_beta(zero_parameter({c_in * stage.expansion})),
      project(c_in * stage.expansion, stage.channels, rng),
      norm2_gamma(constant_parameter({stage.channels}, 1.0)),
      norm2_beta(zero_parameter({stage.channels})),
      stride(stage.stride),
      skip(c_in == stage.channels && stage.stride == 1) {}

FeatureMap InvertedResidualBlock::forward(const FeatureMap& x) const {
  if (x.channels() != in_channels()) {
    throw DimensionError("inverted residual: input has " + std::to_string(x.channels()) +
                         " channels, block expects " + std::to_string(in_channels()));
  }
  if (skip && (in_channels() != out_channels() || stride != 1)) {
    throw ConfigError("inverted residual: skip requires equal widths and stride 1");
  }
  FeatureMap e{expand.forward(x.data), x.h, x.w};
  FeatureMap d = depthwise_conv3x3(e, dw_kernel, stride);
  Tensor a = use_norm ? instance_norm2d(d.data, norm1_gamma, norm1_beta, eps) : d.data;
  a = relu6(a);
  Tensor p = project.forward(a);
  if (use_norm) p = instance_norm2d(p, norm2_gamma, norm2_beta, eps);
  if (skip) p = add(p, x.data);
  return {p, d.h, d.w};
}

void InvertedResidualBlock::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  expand.collect(prefix + ".expand", out);
  out.push_back({prefix + ".dw_kernel", dw_kernel});
  if (use_norm) {
    out.push_back({prefix + ".norm1.gamma", norm1_gamma});
    out.push_back({prefix + ".norm1.beta", norm1_beta});
  }
  project.collect(prefix + ".project", out);
  if (use_norm) {
    out.push_back({prefix + ".norm2.gamma", norm2_gamma});
    out.push_back({prefix + ".norm2.beta", norm2_beta});
  }
}

int RefEncoderConfig::total_stride() const {
  int s = 1;
  for (const auto& st : stages) s *= st.stride;
  return s;
}

void RefEncoderConfig::validate() const {
  if (stages.empty()) throw ConfigError("ref encoder: at least one stage is required");
  if (in_channels == 0) throw ConfigError("ref encoder: in_channels must be positive");
  for (const auto& st : stages) {
    if (st.channels == 0 || st.expansion == 0) throw ConfigError("ref encoder: widths must be positive");
    if (st.stride != 1 && st.stride != 2) throw ConfigError("ref encoder: strides must be 1 or 2");
  }
}

RefEncoder::RefEncoder(const RefEncoderConfig& config, Rng& rng) : total_stride(config.total_stride()) {
  config.validate();
  std::size_t c_in = config.in_channels;
  for (const auto& st : config.stages) {
    blocks.emplace_back(c_in, st, rng);
    c_in = st.channels;
  }
}

FeatureMap RefEncoder::forward(const FeatureMap& input) const {
  FeatureMap cur = input;
  for (const auto& b : blocks) cur = b.forward(cur);
  return cur;
}

FeatureMap RefEncoder::forward(const RangeImage& img) const {
  return forward(FeatureMap{range_input(img), img.height(), img.width()});
}

void RefEncoder::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].collect(prefix + ".block" + std::to_string(b), out);
}

}  // namespace grc
