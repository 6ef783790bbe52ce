// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "grc/cic.hpp"
#include "grc/errors.hpp"
#include "grc/gradcheck.hpp"
#include "grc/ops.hpp"
#include "grc/range_image.hpp"
#include "grc/voxel_grid.hpp"
#include "helpers.hpp"

using namespace grc;
using grc::test::random_tensor;

namespace {

FeatureDistribution random_dist(std::size_t rows, std::size_t c, Rng& rng) {
  return {random_tensor({rows, c}, rng, -2, 2), random_tensor({rows, c}, rng, 0.2, 2.5)};
}

FeatureDistribution constant_dist(double mu, double sigma, std::size_t c = 1) {
  return {Tensor::full({1, c}, mu), Tensor::full({1, c}, sigma)};
}

std::vector<std::uint8_t> all_valid(const ProjectionConfig& cfg) {
  return std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.height * cfg.width), 1);
}

PairedSites pair_point(const Point& p, const ProjectionConfig& cfg) {
  PointCloud c;
  c.points.push_back(p);
  return pair_sites(voxelize(c, 0.1), cfg, 1, all_valid(cfg));
}

}  // namespace

TEST_SUITE("cic") {
  TEST_CASE("zero head gives mu 0 and sigma ln 2 plus the floor") {
    Rng rng(1);
    DistributionHead head(5, 3, rng);
    head.mu = Linear::zeros(5, 3);
    head.sigma = Linear::zeros(5, 3);
    const FeatureDistribution d = head.forward(random_tensor({4, 5}, rng));
    for (double m : d.mu.data()) CHECK(m == 0.0);
    for (double s : d.sigma.data()) CHECK(s == doctest::Approx(std::log(2.0) + 1e-4).epsilon(1e-15));
  }

  TEST_CASE("head sigma stays positive") {
    Rng rng(2);
    DistributionHead head(4, 4, rng);
    head.sigma.weight = random_tensor({4, 4}, rng, -20, 20);
    const FeatureDistribution d = head.forward(random_tensor({2500, 4}, rng, -10, 10));
    for (double s : d.sigma.data()) CHECK(s > 0.0);
    CHECK_THROWS_AS(head.forward(Tensor::zeros({2, 3})), DimensionError);
  }

  TEST_CASE("head gradients match finite differences") {
    Rng rng(3);
    DistributionHead head(3, 2, rng);
    const Tensor f = random_tensor({4, 3}, rng);
    std::vector<NamedTensor> params;
    head.collect("head", params);
    GradCheckOptions opt;
    opt.tolerance = 1e-5;
    CHECK(gradient_check(
              [&] {
                const auto d = head.forward(f);
                return add(sum_all(d.mu), sum_all(d.sigma));
              },
              params, opt)
              .passed);
  }

  TEST_CASE("reparameterize") {
    Rng rng(4);
    const FeatureDistribution d = random_dist(3, 4, rng);
    const Tensor m0 = reparameterize(d, Tensor::zeros({3, 4}));
    CHECK(grc::test::max_abs_diff(m0.data(), d.mu.data()) == 0.0);
    const FeatureDistribution tight{d.mu, Tensor::full({3, 4}, 1e-4)};
    const Tensor eps = random_tensor({3, 4}, rng, -3, 3);
    CHECK(grc::test::max_abs_diff(reparameterize(tight, eps).data(), d.mu.data()) <= 4 * 1e-4 * 3.0);
    CHECK_THROWS_AS(reparameterize(d, Tensor::zeros({3, 5})), DimensionError);
  }

  TEST_CASE("reparameterized samples have the target moments") {
    Rng rng(5);
    const std::size_t n = 100000;
    const FeatureDistribution d{Tensor::full({n, 1}, 1.0), Tensor::full({n, 1}, 2.0)};
    const Tensor m = reparameterize(d, standard_normal({n, 1}, rng));
    double mean = 0.0, var = 0.0;
    for (double v : m.data()) mean += v / n;
    for (double v : m.data()) var += (v - mean) * (v - mean) / (n - 1);
    CHECK(std::abs(mean - 1.0) < 0.02);
    CHECK(std::abs(std::sqrt(var) - 2.0) < 0.02);
  }

  TEST_CASE("reparameterize gradients") {
    Rng rng(6);
    Tensor mu = grc::test::random_param({2, 3}, rng);
    Tensor sigma = grc::test::random_param({2, 3}, rng, 0.5, 1.5);
    const Tensor eps = random_tensor({2, 3}, rng);
    backward(sum_all(reparameterize({mu, sigma}, eps)));
    for (double g : mu.grad()) CHECK(g == 1.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(sigma.grad()[i] == eps[i]);
  }

  TEST_CASE("closed-form KL values") {
    CHECK(kl_diag_gaussian(constant_dist(0, 1), constant_dist(0, 1)).item() == 0.0);
    CHECK(std::abs(kl_diag_gaussian(constant_dist(1, 1), constant_dist(0, 1)).item() - 0.5) < 1e-12);
    CHECK(std::abs(kl_diag_gaussian(constant_dist(0, 2), constant_dist(0, 1)).item() - (std::log(0.5) + 1.5)) <
          1e-12);
    CHECK(std::abs(std::log(0.5) + 1.5 - 0.806853) < 1e-6);
    CHECK_THROWS_AS(kl_diag_gaussian(constant_dist(0, 0), constant_dist(0, 1)), DomainError);
  }

  TEST_CASE("KL is nonnegative and zero only on equality") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const FeatureDistribution p = random_dist(1, 4, rng), q = random_dist(1, 4, rng);
      CHECK(kl_diag_gaussian(p, q).item() > 0.0);
      CHECK(kl_diag_gaussian(p, p).item() == 0.0);
    }
  }

  TEST_CASE("KL gradients in all four inputs") {
    Rng rng(8);
    Tensor mp = grc::test::random_param({2, 3}, rng), sp = grc::test::random_param({2, 3}, rng, 0.3, 2);
    Tensor mq = grc::test::random_param({2, 3}, rng), sq = grc::test::random_param({2, 3}, rng, 0.3, 2);
    GradCheckOptions opt;
    opt.tolerance = 1e-6;
    CHECK(gradient_check([&] { return kl_diag_gaussian({mp, sp}, {mq, sq}); },
                         {{"mp", mp}, {"sp", sp}, {"mq", mq}, {"sq", sq}}, opt)
              .passed);
  }

  TEST_CASE("pair_sites") {
    const ProjectionConfig cfg{16, 64, 3.0, -25.0};
    const PairedSites one = pair_point({5.0, 0.3, -0.4, 0.5}, cfg);
    REQUIRE(one.size() == 1);
    CHECK(one.voxel_rows[0] == 0);
    const Pixel px = *project_point({5.0, 0.3, -0.4, 0.5}, cfg);
    CHECK(one.cells[0] == static_cast<std::uint32_t>(px.v * cfg.width + px.u));

    const PairedSites behind = pair_point({-5.05, -0.05, -0.35, 0.5}, cfg);
    REQUIRE(behind.size() == 1);
    CHECK(behind.cells[0] % cfg.width == static_cast<std::uint32_t>(project_point({-5.05, -0.05, -0.35, 0.5}, cfg)->u));

    CHECK(pair_point({5.0, 0.0, 3.0, 0.5}, cfg).empty());

    PointCloud two;
    two.points = {{5.0, 0.3, -0.4, 0.5}};
    std::vector<std::uint8_t> none(static_cast<std::size_t>(4 * 16), 0);
    CHECK(pair_sites(voxelize(two, 0.1), cfg, 4, none).empty());
  }

  TEST_CASE("cic loss of standard normals is zero") {
    PairedSites pairs{{0, 1, 2}, {2, 0, 1}};
    const FeatureDistribution prior = standard_prior(3, 4);
    CHECK(cic_loss(pairs, prior, prior).item() == 0.0);
  }

  TEST_CASE("identical pair gives twice the prior divergence") {
    Rng rng(9);
    const FeatureDistribution p = random_dist(1, 5, rng);
    const PairedSites pairs{{0}, {0}};
    const double kl = kl_diag_gaussian(p, standard_prior(1, 5)).item();
    CHECK(kl > 0.0);
    CHECK(cic_loss(pairs, p, p).item() == doctest::Approx(2 * kl).epsilon(1e-14));
  }

  TEST_CASE("unclipped cic loss is the sum of four divergences") {
    Rng rng(10);
    const FeatureDistribution g = random_dist(4, 3, rng), r = random_dist(5, 3, rng);
    const PairedSites pairs{{0, 2, 3}, {4, 1, 0}};
    double expected = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::uint32_t gi[] = {pairs.voxel_rows[i]}, ri[] = {pairs.cells[i]};
      const FeatureDistribution gp = g.select(gi), rp = r.select(ri);
      const FeatureDistribution prior = standard_prior(1, 3);
      expected += kl_diag_gaussian(gp, prior).item() + kl_diag_gaussian(rp, prior).item() -
                  kl_diag_gaussian(gp, rp).item() - kl_diag_gaussian(rp, gp).item();
    }
    expected /= 3.0;
    CHECK(std::abs(cic_loss(pairs, g, r, kNoClip).item() - expected) < 1e-12);
  }

  TEST_CASE("clipping caps the cross terms at tau") {
    const FeatureDistribution g = constant_dist(5.0, 1.0, 2), r = constant_dist(-5.0, 1.0, 2);
    const PairedSites pairs{{0}, {0}};
    const FeatureDistribution prior = standard_prior(1, 2);
    const double priors = kl_diag_gaussian(g, prior).item() + kl_diag_gaussian(r, prior).item();
    CHECK(cic_loss(pairs, g, r, 0.5).item() == doctest::Approx(priors - 1.0).epsilon(1e-14));
    CHECK(cic_loss(pairs, g, r, 0.5).item() >= -1.0);
  }

  TEST_CASE("empty pairs give zero loss and count") {
    const FeatureDistribution p = standard_prior(2, 2);
    std::size_t counter = 0;
    CHECK(cic_loss(PairedSites{}, p, p, 10.0, &counter).item() == 0.0);
    CHECK(counter == 1);
  }
}
