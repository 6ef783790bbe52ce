// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grc/rng.hpp"
#include "grc/tensor.hpp"

namespace grc {

/// Parameter with entries drawn from N(0, stddev^2).
Tensor normal_parameter(Shape shape, double stddev, Rng& rng);
Tensor zero_parameter(Shape shape);
Tensor constant_parameter(Shape shape, double value);

/// Fully connected layer applied to the rows of a matrix.
struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  Linear() = default;
  /// He-normal weights, zero bias.
  Linear(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

}  // namespace grc
