// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/kitti_io.hpp"

#include <cmath>
#include <string>

#include "grc/errors.hpp"

namespace grc {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DataError("point " + std::to_string(i) + " has non-finite coordinates");
    }
    if (!std::isfinite(p.r) || p.r < 0.0) {
      throw DataError("point " + std::to_string(i) + " has invalid reflectance");
    }
  }
  if (!labels.empty() && labels.size() != points.size()) {
    throw DataError(std::to_string(labels.size()) + " labels for " + std::to_string(points.size()) +
                    " points");
  }
}

PointCloud parse_kitti_bin(std::span<const std::byte> bytes, ParseStats* stats) {
  constexpr std::size_t kRecord = 16;
  if (bytes.size() % kRecord != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kRecord;
    throw ParseError("kitti bin: truncated record at byte offset " + std::to_string(offset), offset);
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / kRecord;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* rec = bytes.data() + i * kRecord;
    float v[4];
    for (int k = 0; k < 4; ++k) {
      v[k] = load_le<float>(rec + 4 * k);
      if (!std::isfinite(v[k])) {
        throw ParseError("kitti bin: non-finite value in point " + std::to_string(i), i);
      }
    }
    double r = v[3];
    if (r < 0.0) {
      r = 0.0;
      if (stats) ++stats->negative_reflectance_clamped;
    }
    cloud.points[i] = {v[0], v[1], v[2], r};
  }
  return cloud;
}

Bytes write_kitti_bin(const PointCloud& cloud) {
  Bytes out;
  out.reserve(cloud.size() * 16);
  for (const Point& p : cloud.points) {
    store_le<float>(out, static_cast<float>(p.x));
    store_le<float>(out, static_cast<float>(p.y));
    store_le<float>(out, static_cast<float>(p.z));
    store_le<float>(out, static_cast<float>(p.r));
  }
  return out;
}

ClassMap ClassMap::identity() {
  ClassMap m;
  m.identity_ = true;
  return m;
}

int ClassMap::apply(std::uint16_t raw) const {
  if (identity_) return raw;
  auto it = table.find(raw);
  return it == table.end() ? unmapped : it->second;
}

std::uint16_t ClassMap::invert(int train_id) const {
  if (identity_) {
    if (train_id < 0 || train_id > 0xFFFF) throw ConfigError("label " + std::to_string(train_id) + " not writable");
    return static_cast<std::uint16_t>(train_id);
  }
  for (const auto& [raw, id] : table) {
    if (id == train_id) return raw;
  }
  throw ConfigError("class map has no raw id for training id " + std::to_string(train_id));
}

std::vector<int> parse_kitti_label(std::span<const std::byte> bytes, std::size_t n,
                                   const ClassMap& map) {
  if (bytes.size() != 4 * n) {
    throw ParseError("kitti label: expected " + std::to_string(4 * n) + " bytes for " +
                         std::to_string(n) + " points, got " + std::to_string(bytes.size()),
                     bytes.size());
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto word = load_le<std::uint32_t>(bytes.data() + 4 * i);
    labels[i] = map.apply(static_cast<std::uint16_t>(word & 0xFFFFu));
  }
  return labels;
}

Bytes write_kitti_label(std::span<const int> labels, const ClassMap& map) {
  Bytes out;
  out.reserve(labels.size() * 4);
  for (int l : labels) store_le<std::uint32_t>(out, map.invert(l));
  return out;
}

PointCloud load_kitti_scan(const std::filesystem::path& bin, ParseStats* stats) {
  return parse_kitti_bin(read_file_bytes(bin), stats);
}

PointCloud load_kitti_scan(const std::filesystem::path& bin, const std::filesystem::path& label,
                           const ClassMap& map, ParseStats* stats) {
  PointCloud cloud = load_kitti_scan(bin, stats);
  if (!label.empty()) cloud.labels = parse_kitti_label(read_file_bytes(label), cloud.size(), map);
  return cloud;
}

}  // namespace grc
