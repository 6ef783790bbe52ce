// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "grc/errors.hpp"

namespace grc {

std::string to_string(HistField field) {
  return field == HistField::kDistance ? "distance" : "reflectance";
}

HistField parse_hist_field(const std::string& name) {
  if (name == "distance") return HistField::kDistance;
  if (name == "reflectance") return HistField::kReflectance;
  throw ConfigError("unknown histogram field '" + name + "'");
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::vector<double> field_values(const PointCloud& cloud, HistField field) {
  std::vector<double> v;
  v.reserve(cloud.size());
  for (const auto& p : cloud.points) v.push_back(field == HistField::kDistance ? p.range() : p.r);
  return v;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw ConfigError("histogram: bins must be >= 1");
  if (values.empty()) throw DataError("histogram: empty input");
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    double pos = std::floor((v - lo) / width);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    ++h.counts[static_cast<std::size_t>(pos)];
  }
  return h;
}

Histogram histogram(const PointCloud& cloud, HistField field, std::size_t bins, std::optional<double> hi) {
  if (cloud.empty()) throw DataError("histogram: empty cloud");
  const auto values = field_values(cloud, field);
  const double top = hi ? *hi : *std::max_element(values.begin(), values.end());
  return histogram(values, bins, 0.0, top);
}

std::string histogram_csv(const Histogram& h, bool with_frequency) {
  std::ostringstream out;
  out.precision(10);
  out << "bin_lo,bin_hi,count" << (with_frequency ? ",frequency" : "") << '\n';
  const double n = static_cast<double>(h.total());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << h.lo + h.bin_width() * i << ',' << h.lo + h.bin_width() * (i + 1) << ',' << h.counts[i];
    if (with_frequency) out << ',' << (n > 0 ? h.counts[i] / n : 0.0);
    out << '\n';
  }
  return out.str();
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DataError("wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| between consecutive breakpoints of the merged sample.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    const double next = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(i / na - j / nb) * (next - prev);
    prev = next;
    while (i < a.size() && a[i] == next) ++i;
    while (j < b.size() && b[j] == next) ++j;
  }
  return total;
}

double normalized_shift(const PointCloud& reference, const PointCloud& other, HistField field) {
  const auto ref = field_values(reference, field);
  if (ref.empty()) throw DataError("normalized_shift: empty reference cloud");
  const double scale = *std::max_element(ref.begin(), ref.end());
  const double w = wasserstein1(ref, field_values(other, field));
  return scale > 0.0 ? w / scale : w;
}

double chi_square_uniform(const Histogram& h) {
  const double expected = static_cast<double>(h.total()) / static_cast<double>(h.counts.size());
  double stat = 0.0;
  for (std::size_t c : h.counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

}  // namespace grc
