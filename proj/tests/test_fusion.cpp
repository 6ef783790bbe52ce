// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "grc/cic.hpp"
#include "grc/errors.hpp"
#include "grc/fusion.hpp"
#include "grc/ops.hpp"
#include "helpers.hpp"

using namespace grc;
using grc::test::max_abs_diff;
using grc::test::random_tensor;

TEST_SUITE("fusion") {
  TEST_CASE("alpha examples") {
    CHECK(fusion_alpha(0.7, 0.7) == 0.5);
    CHECK(std::abs(fusion_alpha(0.5, 1.0) - 0.731059) < 1e-6);
    CHECK(std::abs(fusion_alpha(0.5, 1.0) - std::exp(2.0) / (std::exp(2.0) + std::exp(1.0))) < 1e-15);
    CHECK(fusion_alpha(1e-4, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fusion_alpha(1.0, 1e-4) >= 0.0);
  }

  TEST_CASE("local fuse averages at equal confidence") {
    Rng rng(1);
    const Tensor mg = random_tensor({3, 4}, rng), mr = random_tensor({3, 4}, rng);
    const Tensor s = random_tensor({3, 4}, rng, 0.5, 1.5);
    const LocalFusion f = local_fuse({mg, s}, {mr, s});
    for (double a : f.alpha.data()) CHECK(a == 0.5);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(f.fused[i] - 0.5 * (mg[i] + mr[i])) < 1e-15);
    const LocalFusion sharp = local_fuse({mg, Tensor::full({3, 4}, 1e-4)}, {mr, Tensor::full({3, 4}, 1.0)});
    CHECK(max_abs_diff(sharp.fused.data(), mg.data()) == 0.0);
    CHECK_THROWS_AS(local_fuse({mg, s}, {Tensor::zeros({3, 5}), Tensor::full({3, 5}, 1.0)}), DimensionError);
  }

  TEST_CASE("single context row") {
    Rng rng(2);
    const AttentionParams p(8, 2, rng);
    const Tensor ctx = random_tensor({1, 8}, rng);
    const Tensor a = cross_attention(random_tensor({3, 8}, rng), ctx, p);
    const Tensor b = cross_attention(random_tensor({3, 8}, rng, -5, 5), ctx, p);
    CHECK(max_abs_diff(a.data(), b.data()) < 1e-12);
    const Tensor expected = p.o.forward(p.v.forward(ctx));
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(a[r * 8 + c] - expected[c]) < 1e-12);
  }

  TEST_CASE("identical context rows give uniform weights") {
    Rng rng(3);
    const AttentionParams p(4, 1, rng);
    const Tensor row = random_tensor({1, 4}, rng);
    std::vector<double> rep;
    for (int i = 0; i < 5; ++i) rep.insert(rep.end(), row.data().begin(), row.data().end());
    std::vector<Tensor> weights;
    const Tensor out = cross_attention(random_tensor({2, 4}, rng), Tensor::from({5, 4}, rep), p, {}, &weights);
    for (double w : weights[0].data()) CHECK(std::abs(w - 0.2) < 1e-15);
    const Tensor expected = p.o.forward(p.v.forward(row));
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(out[c] - expected[c]) < 1e-12);
  }

  TEST_CASE("masking and permutation") {
    Rng rng(4);
    const AttentionParams p(8, 4, rng);
    const Tensor q = random_tensor({3, 8}, rng), ctx = random_tensor({6, 8}, rng);
    const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 1};
    std::vector<Tensor> weights;
    const Tensor a = cross_attention(q, ctx, p, mask, &weights);
    for (const Tensor& w : weights)
      for (std::size_t r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j) s += w[r * 6 + j];
        CHECK(std::abs(s - 1.0) < 1e-12);
        CHECK(w[r * 6 + 1] == 0.0);
        CHECK(w[r * 6 + 4] == 0.0);
      }
    const std::vector<std::size_t> perm{5, 2, 0, 4, 1, 3};
    std::vector<double> pc;
    std::vector<std::uint8_t> pm;
    for (std::size_t i : perm) {
      pc.insert(pc.end(), ctx.data().begin() + i * 8, ctx.data().begin() + (i + 1) * 8);
      pm.push_back(mask[i]);
    }
    CHECK(max_abs_diff(cross_attention(q, Tensor::from({6, 8}, pc), p, pm).data(), a.data()) < 1e-12);
    const std::vector<std::uint8_t> none(6, 0);
    CHECK_THROWS_AS(cross_attention(q, ctx, p, none), DataError);
  }

  TEST_CASE("global fuse output shape and single-token funnel") {
    Rng rng(5);
    const AttentionParams s1(8, 2, rng), s2(8, 2, rng);
    const Tensor geo = random_tensor({7, 8}, rng), ref = random_tensor({12, 8}, rng);
    const std::vector<std::uint8_t> mask(12, 1);
    const Tensor out = global_fuse(geo, ref, random_tensor({3, 8}, rng), s1, s2, mask);
    CHECK(out.dim(0) == 7);
    CHECK(out.dim(1) == 8);
    const Tensor single = global_fuse(geo, ref, random_tensor({1, 8}, rng), s1, s2, mask);
    for (std::size_t r = 1; r < 7; ++r)
      for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(single[r * 8 + c] - single[c]) < 1e-12);
  }

  TEST_CASE("M projection starts as the identity") {
    Rng rng(6);
    const MProjection m(5);
    const Tensor f = random_tensor({4, 5}, rng);
    CHECK(max_abs_diff(m.forward(f).data(), f.data()) == 0.0);
  }

  TEST_CASE("concat keeps local then global columns") {
    const Tensor a = Tensor::from({2, 1}, {1, 2}), b = Tensor::from({2, 2}, {3, 4, 5, 6});
    const Tensor c = concat_features(a, b);
    CHECK(c.dim(1) == 3);
    CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{1, 3, 4, 2, 5, 6});
    CHECK_THROWS_AS(concat_features(a, Tensor::zeros({3, 2})), DimensionError);
  }
}
