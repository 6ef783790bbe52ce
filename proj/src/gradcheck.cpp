// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/gradcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <utility>

#include "grc/errors.hpp"
#include "grc/rng.hpp"

namespace grc {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(const ScalarFn& f, const std::vector<NamedTensor>& inputs,
                               const GradCheckOptions& options) {
  for (const auto& in : inputs) {
    if (!in.tensor.is_leaf()) throw Error("gradient_check: input '" + in.name + "' is not a leaf");
  }
  std::vector<Tensor> leaves;
  for (const auto& in : inputs) {
    Tensor t = in.tensor;
    if (!t.requires_grad()) t.set_requires_grad(true);
    t.zero_grad();
    leaves.push_back(t);
  }

  double base_value = 0.0;
  {
    Tensor loss = f();
    if (loss.numel() != 1) throw DimensionError("gradient_check: function is not scalar-valued");
    base_value = loss.item();
    backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& t : leaves) analytic.push_back(t.grad());

  {
    NoGradGuard guard;
    const double again = f().item();
    if (std::bit_cast<std::uint64_t>(again) != std::bit_cast<std::uint64_t>(base_value)) {
      throw DeterminismError("gradient_check: function is not deterministic (" +
                             std::to_string(base_value) + " vs " + std::to_string(again) + ")");
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> sites;
  for (std::size_t t = 0; t < leaves.size(); ++t)
    for (std::size_t i = 0; i < leaves[t].numel(); ++i) sites.emplace_back(t, i);
  if (options.max_samples > 0 && options.max_samples < sites.size()) {
    Rng rng(options.seed);
    // Partial Fisher-Yates keeps the sample deterministic for a seed.
    for (std::size_t i = 0; i < options.max_samples; ++i) {
      const std::size_t j = i + rng.below(sites.size() - i);
      std::swap(sites[i], sites[j]);
    }
    sites.resize(options.max_samples);
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard guard;
  for (const auto& [t, i] : sites) {
    auto values = leaves[t].mutable_data();
    const double original = values[i];
    values[i] = original + options.step;
    const double plus = f().item();
    values[i] = original - options.step;
    const double minus = f().item();
    values[i] = original;
    GradCheckEntry e;
    e.tensor = inputs[t].name;
    e.index = i;
    e.analytic = analytic[t][i];
    e.numeric = (plus - minus) / (2.0 * options.step);
    e.rel_error = relative_error(e.analytic, e.numeric, options.abs_floor);
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    if (!(e.rel_error < options.tolerance)) report.passed = false;
    report.entries.push_back(std::move(e));
  }
  for (auto& t : leaves) t.zero_grad();
  return report;
}

GradCheckReport gradient_check(const ScalarFn& f, Tensor x, double step, double tolerance) {
  GradCheckOptions options;
  options.step = step;
  options.tolerance = tolerance;
  return gradient_check(f, {{"x", std::move(x)}}, options);
}

}  // namespace grc
