// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace grc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

namespace detail {

using BackwardFn = std::function<void(std::span<const double> out_grad)>;

struct Node {
  const char* op = "";
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Materialized on first accumulation; mutable even when the tensor is
  // shared, because backward only ever adds into it.
  std::vector<double> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> node;
};

}  // namespace detail

/// Dense row-major float64 array with reverse-mode gradient tracking.
///
/// A Tensor is a cheap handle; copies share storage. Values are immutable once
/// an operation has consumed them, with the single exception of leaf tensors
/// (parameters), which the optimizer updates between tapes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  /// Leaf tensor that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }
  explicit operator bool() const { return defined(); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Writable view of a leaf tensor's values. Throws for tensors produced by
  /// an operation, which would silently corrupt a live tape.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  bool is_leaf() const;
  void set_requires_grad(bool value);

  /// Gradient buffer; all zeros when nothing has been accumulated yet.
  std::vector<double> grad() const;
  bool has_grad() const;
  std::span<double> grad_buffer() const;
  void zero_grad();

  /// Same values, no history, no gradient.
  Tensor detach() const;

  const detail::TensorImpl* id() const { return impl_.get(); }
  const std::shared_ptr<detail::Node>& node() const;

  static Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                            std::vector<Tensor> inputs, detail::BackwardFn backward);

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Runs reverse-mode accumulation from a single-element tensor. Gradients add
/// into existing buffers, so calling twice without zero_grad doubles them.
void backward(const Tensor& loss);

/// While alive on a thread, operations skip recording history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace grc
