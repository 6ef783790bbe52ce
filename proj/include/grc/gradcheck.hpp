// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grc/tensor.hpp"

namespace grc {

struct GradCheckEntry {
  std::string tensor;  // name given by the caller, or empty
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Relative errors are measured against max(|analytic|, |numeric|, abs_floor),
  // so entries whose true gradient is zero are judged on an absolute scale.
  double abs_floor = 1e-6;
  // 0 checks every element; otherwise this many elements are sampled
  // uniformly (with a fixed seed) across all tensors.
  std::size_t max_samples = 0;
  std::uint64_t seed = 1;
};

using ScalarFn = std::function<Tensor()>;

/// Compares reverse-mode gradients of a scalar function against central
/// differences. The inputs must be leaf tensors; `f` reads them through
/// captures. Throws DeterminismError when two evaluations at the same point
/// disagree.
GradCheckReport gradient_check(const ScalarFn& f, const std::vector<NamedTensor>& inputs,
                               const GradCheckOptions& options = {});

GradCheckReport gradient_check(const ScalarFn& f, Tensor x, double step, double tolerance);

double relative_error(double analytic, double numeric, double abs_floor);

}  // namespace grc
