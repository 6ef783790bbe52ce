// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "grc/tensor.hpp"

namespace grc {

/// [n x k] * [k x p] -> [n x p].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

enum class ElementwiseOp { kAdd, kSub, kMul, kDiv, kExp, kLog, kNeg };

/// Binary ops accept equal shapes, or one operand that is a vector matching
/// the other's last axis (bias-style broadcast). Unary ops ignore `b`.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b = Tensor());

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor neg(const Tensor& x);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);

/// ln(1 + e^x) without overflow.
Tensor softplus(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
/// min(max(x, 0), 6).
Tensor relu6(const Tensor& x);
/// min(x, cap); gradient is zero where the cap is active.
Tensor clamp_max(const Tensor& x, double cap);

/// Softmax over the last axis with max subtraction. `mask`, when given, has
/// one entry per last-axis element; zero entries get weight exactly 0. A row
/// with every entry masked raises DataError.
Tensor softmax_lastaxis(const Tensor& x, std::span<const std::uint8_t> mask = {});

enum class ReduceOp { kSum, kMean };
/// Reduces one axis away. A rank-1 input reduces to shape [1].
Tensor reduce(ReduceOp op, const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// out[i] = x[index[i]] for a [V x c] input; backward scatter-adds.
Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index);
/// Copy of `base` with rows `index[i]` replaced by values[i].
Tensor overwrite_rows(const Tensor& base, std::span<const std::uint32_t> index,
                      const Tensor& values);
/// Channelwise concatenation of two matrices with equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
/// Multiplies row i of a [n x c] matrix by s[i].
Tensor scale_rows(const Tensor& x, const Tensor& s);

/// x * w + b for x [n x k], w [k x p], b [p].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Mean softmax cross-entropy over rows whose label is in [0, C); any other
/// label is ignored. Throws DataError when no row is usable.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace grc
