// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grc/errors.hpp"

namespace grc {

ConfusionMatrix::ConfusionMatrix(int num_classes) : classes_(num_classes) {
  if (num_classes < 1) throw ConfigError("confusion matrix: num_classes must be positive");
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  missed_.assign(num_classes, 0);
}

void ConfusionMatrix::add(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("confusion matrix: " + std::to_string(pred.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = pred[i];
    if (t < 0 || t >= classes_) continue;
    ++valid_;
    if (p < 0 || p >= classes_) {
      ++missed_[t];
      continue;
    }
    ++counts_[t * classes_ + p];
  }
}

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t c = 0;
  for (int k = 0; k < classes_; ++k) c += at(k, k);
  return c;
}

double ConfusionMatrix::accuracy() const {
  return valid_ == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(valid_);
}

IouReport iou_report(const ConfusionMatrix& cm) {
  if (cm.valid_points() == 0) throw DataError("miou: no points with a valid label");
  const int c = cm.num_classes();
  IouReport r;
  r.per_class.assign(c, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (int k = 0; k < c; ++k) {
    std::uint64_t tp = cm.at(k, k), fp = 0, fn = 0;
    for (int j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    fn += cm.missed(k);
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;
    r.per_class[k] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += r.per_class[k];
    ++r.classes_scored;
  }
  r.miou = r.classes_scored ? sum / static_cast<double>(r.classes_scored) : 0.0;
  r.accuracy = cm.accuracy();
  return r;
}

IouReport miou(std::span<const int> pred, std::span<const int> truth, int num_classes) {
  ConfusionMatrix cm(num_classes);
  cm.add(pred, truth);
  return iou_report(cm);
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows: expected a matrix, got " + shape_str(logits.shape()));
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  const auto d = logits.data();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = d.data() + i * c;
    out[i] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  return out;
}

}  // namespace grc
