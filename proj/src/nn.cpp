// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/nn.hpp"

#include <cmath>

#include "grc/ops.hpp"

namespace grc {

Tensor normal_parameter(Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = stddev * rng.normal();
  return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor zero_parameter(Shape shape) { return constant_parameter(std::move(shape), 0.0); }

Tensor constant_parameter(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor::parameter(std::move(shape), std::vector<double>(n, value));
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng)
    : weight(normal_parameter({in, out}, std::sqrt(2.0 / static_cast<double>(in)), rng)),
      bias(zero_parameter({out})) {}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  Linear l;
  l.weight = zero_parameter({in, out});
  l.bias = zero_parameter({out});
  return l;
}

Tensor Linear::forward(const Tensor& x) const { return linear(x, weight, bias); }

void Linear::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace grc
