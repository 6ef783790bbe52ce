// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grc/errors.hpp"

namespace grc {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

// How b lines up against a in a binary elementwise op.
enum class Broadcast { kNone, kRhsVector, kLhsVector };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0)) return Broadcast::kRhsVector;
  if (a.rank() == 1 && b.rank() >= 1 && b.shape().back() == a.dim(0)) return Broadcast::kLhsVector;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(a.shape()) + " with " +
                       shape_str(b.shape()));
}

Tensor binary(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  const char* name = op == ElementwiseOp::kAdd   ? "add"
                     : op == ElementwiseOp::kSub ? "sub"
                     : op == ElementwiseOp::kMul ? "mul"
                                                 : "div";
  if (!b.defined()) throw DimensionError(std::string(name) + ": missing second operand");
  const Broadcast mode = broadcast_mode(a, b, name);
  // `big` carries the output shape; the vector side (if any) repeats with period `width`.
  const bool lhs_big = mode != Broadcast::kLhsVector;
  const Tensor& big = lhs_big ? a : b;
  const std::size_t n = big.numel();
  const std::size_t width = mode == Broadcast::kNone ? n : big.shape().back();
  auto ai = [&](std::size_t i) { return mode == Broadcast::kLhsVector ? i % width : i; };
  auto bi = [&](std::size_t i) { return mode == Broadcast::kRhsVector ? i % width : i; };

  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n);
  switch (op) {
    case ElementwiseOp::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[ai(i)] + bd[bi(i)];
      break;
    case ElementwiseOp::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[ai(i)] - bd[bi(i)];
      break;
    case ElementwiseOp::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[ai(i)] * bd[bi(i)];
      break;
    case ElementwiseOp::kDiv:
      for (std::size_t i = 0; i < bd.size(); ++i) {
        if (bd[i] == 0.0) throw DomainError("div: zero divisor", i);
      }
      for (std::size_t i = 0; i < n; ++i) out[i] = ad[ai(i)] / bd[bi(i)];
      break;
    default:
      break;
  }

  return Tensor::make_result(
      big.shape(), std::move(out), name, {a, b},
      [a, b, op, n, mode, width](std::span<const double> g) {
        auto ai = [&](std::size_t i) { return mode == Broadcast::kLhsVector ? i % width : i; };
        auto bi = [&](std::size_t i) { return mode == Broadcast::kRhsVector ? i % width : i; };
        const auto ad = a.data();
        const auto bd = b.data();
        if (a.requires_grad()) {
          auto ga = a.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) {
            double d = g[i];
            if (op == ElementwiseOp::kMul) d *= bd[bi(i)];
            if (op == ElementwiseOp::kDiv) d /= bd[bi(i)];
            ga[ai(i)] += d;
          }
        }
        if (b.requires_grad()) {
          auto gb = b.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) {
            double d = g[i];
            if (op == ElementwiseOp::kSub) d = -d;
            if (op == ElementwiseOp::kMul) d *= ad[ai(i)];
            if (op == ElementwiseOp::kDiv) {
              const double q = bd[bi(i)];
              d *= -ad[ai(i)] / (q * q);
            }
            gb[bi(i)] += d;
          }
        }
      });
}

// Unary op whose derivative can be written from (input, output) values.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
  // The closure keeps its own copy of the outputs for the derivative.
  std::vector<double> saved = out;
  return Tensor::make_result(x.shape(), std::move(out), name, {x},
                             [x, saved = std::move(saved), deriv](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               const auto xd = x.data();
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 gx[i] += g[i] * deriv(xd[i], saved[i]);
                               }
                             });
}

double stable_softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), k = a.dim(1), p = b.dim(1);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ad[i * k + t];
      if (av == 0.0) continue;
      const double* brow = bd.data() + t * p;
      for (std::size_t j = 0; j < p; ++j) row[j] += av * brow[j];
    }
  }
  return Tensor::make_result({n, p}, std::move(out), "matmul", {a, b},
                             [a, b, n, k, p](std::span<const double> g) {
                               const auto ad = a.data();
                               const auto bd = b.data();
                               if (a.requires_grad()) {
                                 auto ga = a.grad_buffer();
                                 // ga += g * b^T
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* grow = g.data() + i * p;
                                   for (std::size_t t = 0; t < k; ++t) {
                                     const double* brow = bd.data() + t * p;
                                     double acc = 0.0;
                                     for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
                                     ga[i * k + t] += acc;
                                   }
                                 }
                               }
                               if (b.requires_grad()) {
                                 auto gb = b.grad_buffer();
                                 // gb += a^T * g
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* grow = g.data() + i * p;
                                   for (std::size_t t = 0; t < k; ++t) {
                                     const double av = ad[i * k + t];
                                     if (av == 0.0) continue;
                                     double* gbrow = gb.data() + t * p;
                                     for (std::size_t j = 0; j < p; ++j) gbrow[j] += av * grow[j];
                                   }
                                 }
                               }
                             });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  const auto ad = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = ad[i * c + j];
  return Tensor::make_result({c, r}, std::move(out), "transpose", {a},
                             [a, r, c](std::span<const double> g) {
                               auto ga = a.grad_buffer();
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
                             });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case ElementwiseOp::kAdd:
    case ElementwiseOp::kSub:
    case ElementwiseOp::kMul:
    case ElementwiseOp::kDiv:
      return binary(op, a, b);
    case ElementwiseOp::kExp:
      return unary(
          a, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
    case ElementwiseOp::kLog: {
      const auto ad = a.data();
      for (std::size_t i = 0; i < ad.size(); ++i) {
        if (!(ad[i] > 0.0)) throw DomainError("log: non-positive argument", i);
      }
      return unary(
          a, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
    }
    case ElementwiseOp::kNeg:
      return unary(
          a, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
  }
  throw Error("elementwise: unknown op");
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kMul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kDiv, a, b); }
Tensor exp(const Tensor& x) { return elementwise(ElementwiseOp::kExp, x); }
Tensor log(const Tensor& x) { return elementwise(ElementwiseOp::kLog, x); }
Tensor neg(const Tensor& x) { return elementwise(ElementwiseOp::kNeg, x); }

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, "add_scalar", [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor softplus(const Tensor& x) {
  return unary(x, "softplus", stable_softplus, [](double v, double) { return stable_sigmoid(v); });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor relu6(const Tensor& x) {
  return unary(
      x, "relu6", [](double v) { return std::clamp(v, 0.0, 6.0); },
      [](double v, double) { return (v > 0.0 && v < 6.0) ? 1.0 : 0.0; });
}

Tensor clamp_max(const Tensor& x, double cap) {
  return unary(
      x, "clamp_max", [cap](double v) { return std::min(v, cap); },
      [cap](double v, double) { return v < cap ? 1.0 : 0.0; });
}

Tensor softmax_lastaxis(const Tensor& x, std::span<const std::uint8_t> mask) {
  if (x.rank() < 1) throw DimensionError("softmax: rank-0 input");
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.numel() / width;
  if (!mask.empty() && mask.size() != width) {
    throw DimensionError("softmax: mask length " + std::to_string(mask.size()) +
                         " does not match last axis " + std::to_string(width));
  }
  auto keep = [&](std::size_t j) { return mask.empty() || mask[j] != 0; };
  const auto xd = x.data();
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * width;
    double* o = out.data() + r * width;
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < width; ++j) {
      if (!keep(j)) continue;
      mx = any ? std::max(mx, in[j]) : in[j];
      any = true;
    }
    if (!any) {
      throw DataError("softmax: row " + std::to_string(r) + " has no unmasked entries");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (!keep(j)) continue;
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < width; ++j) o[j] /= z;
  }
  std::vector<double> saved = out;
  return Tensor::make_result(x.shape(), std::move(out), "softmax", {x},
                             [x, saved = std::move(saved), width, rows](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const double* y = saved.data() + r * width;
                                 const double* gr = g.data() + r * width;
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < width; ++j) dot += y[j] * gr[j];
                                 for (std::size_t j = 0; j < width; ++j)
                                   gx[r * width + j] += y[j] * (gr[j] - dot);
                               }
                             });
}

Tensor reduce(ReduceOp op, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(axis) + " invalid for " +
                         shape_str(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  if (out_shape.empty()) out_shape.push_back(1);
  const double factor = op == ReduceOp::kMean ? 1.0 / static_cast<double>(n) : 1.0;

  const auto xd = x.data();
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xd[(o * n + k) * inner + i];
  for (double& v : out) v *= factor;

  return Tensor::make_result(std::move(out_shape), std::move(out),
                             op == ReduceOp::kMean ? "mean" : "sum", {x},
                             [x, outer, inner, n, factor](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               for (std::size_t o = 0; o < outer; ++o)
                                 for (std::size_t k = 0; k < n; ++k)
                                   for (std::size_t i = 0; i < inner; ++i)
                                     gx[(o * n + k) * inner + i] += g[o * inner + i] * factor;
                             });
}

Tensor sum_all(const Tensor& x) { return reduce(ReduceOp::kSum, reshape(x, {x.numel()}), 0); }
Tensor mean_all(const Tensor& x) { return reduce(ReduceOp::kMean, reshape(x, {x.numel()}), 0); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  std::vector<double> values(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(values), "reshape", {x},
                             [x](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                             });
}

Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index) {
  require_rank(x, 2, "gather_rows");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      throw MappingError("gather_rows: index " + std::to_string(index[i]) + " at position " +
                         std::to_string(i) + " exceeds " + std::to_string(rows) + " rows");
    }
  }
  const auto xd = x.data();
  std::vector<double> out(index.size() * c);
  for (std::size_t i = 0; i < index.size(); ++i)
    std::copy_n(xd.data() + index[i] * c, c, out.data() + i * c);
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return Tensor::make_result({index.size(), c}, std::move(out), "gather_rows", {x},
                             [x, idx = std::move(idx), c](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               for (std::size_t i = 0; i < idx.size(); ++i)
                                 for (std::size_t j = 0; j < c; ++j) gx[idx[i] * c + j] += g[i * c + j];
                             });
}

Tensor overwrite_rows(const Tensor& base, std::span<const std::uint32_t> index,
                      const Tensor& values) {
  require_rank(base, 2, "overwrite_rows");
  const std::size_t rows = base.dim(0), c = base.dim(1);
  if (index.empty()) return base;
  require_rank(values, 2, "overwrite_rows");
  if (values.dim(0) != index.size() || values.dim(1) != c) {
    throw DimensionError("overwrite_rows: values " + shape_str(values.shape()) + " for " +
                         std::to_string(index.size()) + " rows of width " + std::to_string(c));
  }
  std::vector<std::uint8_t> replaced(rows, 0);
  for (std::uint32_t r : index) {
    if (r >= rows) throw MappingError("overwrite_rows: row " + std::to_string(r) + " out of range");
    if (replaced[r]) throw MappingError("overwrite_rows: row " + std::to_string(r) + " repeated");
    replaced[r] = 1;
  }
  std::vector<double> out(base.data().begin(), base.data().end());
  const auto vd = values.data();
  for (std::size_t i = 0; i < index.size(); ++i)
    std::copy_n(vd.data() + i * c, c, out.data() + index[i] * c);
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return Tensor::make_result(
      base.shape(), std::move(out), "overwrite_rows", {base, values},
      [base, values, idx = std::move(idx), replaced = std::move(replaced), rows,
       c](std::span<const double> g) {
        if (base.requires_grad()) {
          auto gb = base.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            if (!replaced[r])
              for (std::size_t j = 0; j < c; ++j) gb[r * c + j] += g[r * c + j];
        }
        if (values.requires_grad()) {
          auto gv = values.grad_buffer();
          for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) gv[i * c + j] += g[idx[i] * c + j];
        }
      });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_cols: row mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), p = a.dim(1), q = b.dim(1);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n * (p + q));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(ad.data() + i * p, p, out.data() + i * (p + q));
    std::copy_n(bd.data() + i * q, q, out.data() + i * (p + q) + p);
  }
  return Tensor::make_result({n, p + q}, std::move(out), "concat_cols", {a, b},
                             [a, b, n, p, q](std::span<const double> g) {
                               if (a.requires_grad()) {
                                 auto ga = a.grad_buffer();
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
                               }
                               if (b.requires_grad()) {
                                 auto gb = b.grad_buffer();
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t j = 0; j < q; ++j)
                                     gb[i * q + j] += g[i * (p + q) + p + j];
                               }
                             });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (count == 0 || begin + count > c) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside width " + std::to_string(c));
  }
  const auto xd = x.data();
  std::vector<double> out(n * count);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(xd.data() + i * c + begin, count, out.data() + i * count);
  return Tensor::make_result({n, count}, std::move(out), "slice_cols", {x},
                             [x, n, c, begin, count](std::span<const double> g) {
                               auto gx = x.grad_buffer();
                               for (std::size_t i = 0; i < n; ++i)
                                 for (std::size_t j = 0; j < count; ++j)
                                   gx[i * c + begin + j] += g[i * count + j];
                             });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require_rank(x, 2, "scale_rows");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (s.numel() != n) {
    throw DimensionError("scale_rows: " + shape_str(s.shape()) + " scales for " +
                         std::to_string(n) + " rows");
  }
  const auto xd = x.data();
  const auto sd = s.data();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xd[i * c + j] * sd[i];
  return Tensor::make_result({n, c}, std::move(out), "scale_rows", {x, s},
                             [x, s, n, c](std::span<const double> g) {
                               const auto xd = x.data();
                               const auto sd = s.data();
                               if (x.requires_grad()) {
                                 auto gx = x.grad_buffer();
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * sd[i];
                               }
                               if (s.requires_grad()) {
                                 auto gs = s.grad_buffer();
                                 for (std::size_t i = 0; i < n; ++i) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j] * xd[i * c + j];
                                   gs[i] += acc;
                                 }
                               }
                             });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  auto valid = [classes](int l) { return l >= 0 && static_cast<std::size_t>(l) < classes; };
  std::size_t count = 0;
  for (int l : labels) count += valid(l) ? 1 : 0;
  if (count == 0) throw DataError("cross_entropy: no valid labels");

  const auto ld = logits.data();
  std::vector<double> probs(n * classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid(labels[i])) continue;
    const double* row = ld.data() + i * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t j = 0; j < classes; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    total += log_z - row[labels[i]];
    for (std::size_t j = 0; j < classes; ++j) probs[i * classes + j] = std::exp(row[j] - log_z);
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> lab(labels.begin(), labels.end());
  return Tensor::make_result(
      {1}, {total * inv}, "cross_entropy", {logits},
      [logits, probs = std::move(probs), lab = std::move(lab), classes, inv,
       valid](std::span<const double> g) {
        auto gl = logits.grad_buffer();
        for (std::size_t i = 0; i < lab.size(); ++i) {
          if (!valid(lab[i])) continue;
          for (std::size_t j = 0; j < classes; ++j) {
            const double onehot = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
            gl[i * classes + j] += g[0] * inv * (probs[i * classes + j] - onehot);
          }
        }
      });
}

}  // namespace grc
