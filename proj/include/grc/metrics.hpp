// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "grc/tensor.hpp"

namespace grc {

/// Counts over points whose true label is in [0, C). Predictions outside
/// [0, C) count as misses.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void add(std::span<const int> pred, std::span<const int> truth);

  int num_classes() const { return classes_; }
  std::uint64_t at(int truth, int pred) const { return counts_[truth * classes_ + pred]; }
  std::uint64_t missed(int truth) const { return missed_[truth]; }
  std::uint64_t valid_points() const { return valid_; }
  std::uint64_t correct() const;
  double accuracy() const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t valid_ = 0;
  std::vector<std::uint64_t> missed_;  // per true class, prediction outside [0, C)
};

struct IouReport {
  std::vector<double> per_class;  // NaN for classes with an empty union
  double miou = 0.0;
  double accuracy = 0.0;
  std::size_t classes_scored = 0;
};

/// IoU = TP / (TP + FP + FN) per class; mIoU averages the classes whose
/// union is non-empty. Throws DataError when no point has a valid label.
IouReport iou_report(const ConfusionMatrix& cm);
IouReport miou(std::span<const int> pred, std::span<const int> truth, int num_classes);

/// Row-wise argmax of a [n x C] matrix.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace grc
