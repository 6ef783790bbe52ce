// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "grc/errors.hpp"
#include "grc/gradcheck.hpp"
#include "grc/ops.hpp"
#include "grc/range_encoder.hpp"
#include "grc/range_image.hpp"
#include "grc/verify.hpp"
#include "helpers.hpp"

using namespace grc;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PointCloud in_fov_cloud(std::size_t n, Rng& rng, const ProjectionConfig& cfg) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = rng.uniform(2.0, 50.0);
    const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double pitch = rng.uniform(cfg.fov_down_deg + 0.01, cfg.fov_up_deg - 0.01) * kDeg;
    c.points.push_back({d * std::cos(pitch) * std::cos(yaw), d * std::cos(pitch) * std::sin(yaw),
                        d * std::sin(pitch), rng.uniform(0.0, 1.0)});
  }
  return c;
}

// Channel-last [h*w x c] to channel-first [c][h][w].
std::vector<double> to_chw(const Tensor& t, int h, int w) {
  const std::size_t c = t.dim(1);
  std::vector<double> out(c * h * w);
  for (int p = 0; p < h * w; ++p)
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * h * w + p] = t[p * c + ch];
  return out;
}

std::vector<double> dense_linear(const std::vector<double>& chw, int c_in, int hw, const Linear& l) {
  const std::size_t c_out = l.out_features();
  std::vector<double> out(c_out * hw);
  for (std::size_t o = 0; o < c_out; ++o)
    for (int p = 0; p < hw; ++p) {
      double s = l.bias[o];
      for (int i = 0; i < c_in; ++i) s += chw[i * hw + p] * l.weight[i * c_out + o];
      out[o * hw + p] = s;
    }
  return out;
}

void dense_instance_norm(std::vector<double>& chw, int c, int hw, const Tensor& gamma, const Tensor& beta,
                         double eps) {
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < hw; ++p) mean += chw[ch * hw + p] / hw;
    for (int p = 0; p < hw; ++p) var += (chw[ch * hw + p] - mean) * (chw[ch * hw + p] - mean) / hw;
    for (int p = 0; p < hw; ++p)
      chw[ch * hw + p] = (chw[ch * hw + p] - mean) / std::sqrt(var + eps) * gamma[ch] + beta[ch];
  }
}

}  // namespace

TEST_SUITE("rangeview") {
  TEST_CASE("projection formula examples") {
    const ProjectionConfig cfg{64, 2048, 3.0, -25.0};
    CHECK(project_point({1, 0, 0, 0}, cfg) == Pixel{1024, 6});
    CHECK(project_point({0, 1, 0, 0}, cfg)->u == 512);
    CHECK_FALSE(project_point({0, 0, 0, 0}, cfg).has_value());
    CHECK_FALSE(project_point({1, 0, 1, 0}, cfg).has_value());
  }

  TEST_CASE("nearer point wins a pixel") {
    const ProjectionConfig cfg{64, 2048, 3.0, -25.0};
    PointCloud c;
    c.points = {{5, 0, 0, 0.1}, {3, 0, 0, 0.9}};
    const RangeImage img = spherical_project(c, cfg);
    CHECK(img.valid_count() == 1);
    CHECK(img.unproject(1024, 6) == std::optional<std::size_t>{1});
    CHECK(img.range[img.pixel(1024, 6)] == 3.0);
  }

  TEST_CASE("masked pixels unproject to no data") {
    const ProjectionConfig cfg{8, 16, 3.0, -25.0};
    PointCloud c;
    c.points = {{1, 0, 0, 0.5}};
    c.points.push_back({0, 0, 0, 0.5});
    const RangeImage img = spherical_project(c, cfg);
    CHECK(img.skipped_origin == 1);
    CHECK_FALSE(img.unproject(0, 0).has_value());
    CHECK_THROWS_AS(img.unproject(16, 0), DomainError);
  }

  TEST_CASE("survivors round-trip through their pixels") {
    Rng rng(1);
    const ProjectionConfig cfg{64, 512, 3.0, -25.0};
    const PointCloud c = in_fov_cloud(1000, rng, cfg);
    const RangeImage img = spherical_project(c, cfg);
    std::size_t survivors = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Pixel px = *project_point(c.points[i], cfg);
      const auto back = img.unproject(px.u, px.v);
      REQUIRE(back.has_value());
      if (*back == i) {
        ++survivors;
      } else {
        CHECK(c.points[*back].range() <= c.points[i].range());
      }
    }
    CHECK(survivors == img.valid_count());
  }

  TEST_CASE("instance norm statistics") {
    Rng rng(2);
    const Tensor x = grc::test::random_tensor({30, 3}, rng, -4, 7);
    const double eps = 1e-5;
    const Tensor y = instance_norm2d(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), eps);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double m_in = 0, v_in = 0, m = 0, v = 0;
      for (std::size_t p = 0; p < 30; ++p) m_in += x[p * 3 + ch] / 30, m += y[p * 3 + ch] / 30;
      for (std::size_t p = 0; p < 30; ++p) {
        v_in += (x[p * 3 + ch] - m_in) * (x[p * 3 + ch] - m_in) / 30;
        v += (y[p * 3 + ch] - m) * (y[p * 3 + ch] - m) / 30;
      }
      CHECK(std::abs(m) < 1e-10);
      CHECK(std::abs(v - v_in / (v_in + eps)) < 1e-6);
    }
    const Tensor constant = instance_norm2d(Tensor::full({10, 2}, 3.0), Tensor::full({2}, 1.0), Tensor::zeros({2}), eps);
    for (double e : constant.data()) CHECK(e == 0.0);
  }

  TEST_CASE("instance norm gradient") {
    Rng rng(3);
    Tensor x = grc::test::random_param({12, 2}, rng);
    Tensor g = grc::test::random_param({2}, rng, 0.5, 1.5);
    Tensor b = grc::test::random_param({2}, rng);
    const Tensor w = grc::test::random_tensor({12, 2}, rng);
    GradCheckOptions opt;
    opt.tolerance = 1e-5;
    CHECK(gradient_check([&] { return sum_all(mul(instance_norm2d(x, g, b, 1e-5), w)); },
                         {{"x", x}, {"gamma", g}, {"beta", b}}, opt)
              .passed);
  }

  TEST_CASE("inverted residual with zero weights outputs zero") {
    Rng rng(4);
    InvertedResidualBlock block(4, {8, 2, 1}, rng);
    block.expand = Linear::zeros(4, 8);
    block.project = Linear::zeros(8, 8);
    block.dw_kernel = Tensor::zeros({9, 8});
    const FeatureMap out = block.forward({grc::test::random_tensor({25, 4}, rng), 5, 5});
    for (double e : out.data.data()) CHECK(e == 0.0);
  }

  TEST_CASE("inverted residual with delta kernels is the identity") {
    Rng rng(5);
    InvertedResidualBlock block(3, {3, 1, 1}, rng);
    std::vector<double> eye(9, 0.0), dw(27, 0.0);
    for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0, dw[4 * 3 + i] = 1.0;
    block.expand.weight = Tensor::from({3, 3}, eye);
    block.project.weight = Tensor::from({3, 3}, eye);
    block.dw_kernel = Tensor::from({9, 3}, dw);
    block.use_norm = false;
    block.skip = false;
    const FeatureMap in{grc::test::random_tensor({20, 3}, rng, 0.0, 6.0), 4, 5};
    CHECK(grc::test::max_abs_diff(block.forward(in).data.data(), in.data.data()) < 1e-15);
  }

  TEST_CASE("inverted residual matches a direct dense oracle") {
    Rng rng(6);
    for (const IRStageConfig stage : {IRStageConfig{4, 2, 1}, IRStageConfig{6, 3, 2}}) {
      InvertedResidualBlock block(4, stage, rng);
      block.norm1_beta = grc::test::random_tensor({block.dw_kernel.dim(1)}, rng);
      block.norm2_gamma = grc::test::random_tensor({stage.channels}, rng, 0.5, 2.0);
      block.expand.bias = grc::test::random_tensor({block.expand.out_features()}, rng);
      const int h = 5, w = 5, c = 4, ce = static_cast<int>(block.dw_kernel.dim(1));
      const FeatureMap in{grc::test::random_tensor({25, 4}, rng), h, w};
      const FeatureMap out = block.forward(in);

      std::vector<double> x = to_chw(in.data, h, w);
      std::vector<double> e = dense_linear(x, c, h * w, block.expand);
      std::vector<double> kt(9 * ce);
      for (int t = 0; t < 9; ++t)
        for (int ch = 0; ch < ce; ++ch) kt[t * ce + ch] = block.dw_kernel[t * ce + ch];
      std::vector<double> d = oracle::dense_depthwise(e, ce, h, w, kt, stage.stride);
      const int ho = out.h, wo = out.w;
      REQUIRE(static_cast<int>(d.size()) == ce * ho * wo);
      dense_instance_norm(d, ce, ho * wo, block.norm1_gamma, block.norm1_beta, block.eps);
      for (double& v : d) v = std::clamp(v, 0.0, 6.0);
      std::vector<double> p = dense_linear(d, ce, ho * wo, block.project);
      dense_instance_norm(p, static_cast<int>(stage.channels), ho * wo, block.norm2_gamma, block.norm2_beta,
                          block.eps);
      if (block.skip)
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += x[i];
      CHECK(grc::test::max_abs_diff(to_chw(out.data, ho, wo), p) < 1e-10);
    }
  }

  TEST_CASE("inverted residual rejects a channel mismatch") {
    Rng rng(7);
    InvertedResidualBlock block(4, {4, 2, 1}, rng);
    CHECK_THROWS_AS(block.forward({Tensor::zeros({9, 3}), 3, 3}), DimensionError);
  }

  TEST_CASE("default encoder output shape") {
    Rng rng(8);
    const RefEncoder enc(RefEncoderConfig{}, rng);
    CHECK(enc.total_stride == 4);
    const FeatureMap out = enc.forward(FeatureMap{grc::test::random_tensor({64 * 512, 2}, rng), 64, 512});
    CHECK(out.h == 16);
    CHECK(out.w == 128);
    CHECK(out.channels() == 32);
  }

  TEST_CASE("all-invalid image encodes to a constant field") {
    Rng rng(9);
    const RefEncoder enc(RefEncoderConfig{}, rng);
    RangeImage img = spherical_project(PointCloud{}, ProjectionConfig{16, 64, 3.0, -25.0});
    const FeatureMap out = enc.forward(img);
    const std::size_t c = out.channels();
    for (std::size_t cell = 1; cell < static_cast<std::size_t>(out.h * out.w); ++cell)
      for (std::size_t ch = 0; ch < c; ++ch) REQUIRE(out.data[cell * c + ch] == out.data[ch]);
  }

  TEST_CASE("circular shift by the stride shifts the output by one cell") {
    Rng rng(10);
    const RefEncoder enc(RefEncoderConfig{}, rng);
    const int h = 16, w = 64, s = enc.total_stride;
    const Tensor x = grc::test::random_tensor({static_cast<std::size_t>(h * w), 2}, rng);
    std::vector<double> shifted(x.numel());
    for (int y = 0; y < h; ++y)
      for (int col = 0; col < w; ++col)
        for (int ch = 0; ch < 2; ++ch) shifted[(y * w + (col + s) % w) * 2 + ch] = x[(y * w + col) * 2 + ch];
    const FeatureMap a = enc.forward(FeatureMap{x, h, w});
    const FeatureMap b = enc.forward(FeatureMap{Tensor::from(x.shape(), shifted), h, w});
    const std::size_t c = a.channels();
    double err = 0.0;
    for (int y = 0; y < a.h; ++y)
      for (int col = 0; col < a.w; ++col)
        for (std::size_t ch = 0; ch < c; ++ch)
          err = std::max(err, std::abs(b.data[(y * a.w + (col + 1) % a.w) * c + ch] - a.data[(y * a.w + col) * c + ch]));
    CHECK(err < 1e-10);
  }

  TEST_CASE("encoder is invariant to affine reflectance rescaling") {
    Rng rng(11);
    const ProjectionConfig cfg{16, 64, 3.0, -25.0};
    PointCloud c = in_fov_cloud(2000, rng, cfg);
    const RefEncoder enc(RefEncoderConfig{}, rng);
    const FeatureMap a = enc.forward(spherical_project(c, cfg));
    for (Point& p : c.points) p.r = 3.5 * p.r + 0.25;
    const FeatureMap b = enc.forward(spherical_project(c, cfg));
    CHECK(grc::test::max_abs_diff(a.data.data(), b.data.data()) < 1e-9);
  }

  TEST_CASE("16-bit PGM layout") {
    const std::string pgm = to_pgm16({0.0, 0.5, 1.0, 2.0}, 2, 2, 1.0);
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(pgm.size() == header.size() + 8);
    CHECK(pgm.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(pgm[header.size() + 6]) == 0xFF);
    CHECK(static_cast<unsigned char>(pgm[header.size() + 2]) == 0x80);
  }
}
