// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/range_image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grc/errors.hpp"

namespace grc {

void ProjectionConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("projection: image size must be at least 1x1");
  if (!(fov_up_deg > fov_down_deg)) throw ConfigError("projection: fov_up must exceed fov_down");
}

std::optional<Pixel> project_point(const Point& p, const ProjectionConfig& config) {
  const double range = p.range();
  if (range == 0.0) return std::nullopt;
  const double up = config.fov_up_deg * std::numbers::pi / 180.0;
  const double down = config.fov_down_deg * std::numbers::pi / 180.0;
  const double yaw = std::atan2(p.y, p.x);
  const double pitch = std::asin(std::clamp(p.z / range, -1.0, 1.0));
  if (pitch > up || pitch < down) return std::nullopt;
  const double fu = std::floor(0.5 * (1.0 - yaw / std::numbers::pi) * config.width);
  const double fv = std::floor((1.0 - (pitch - down) / (up - down)) * config.height);
  Pixel px;
  px.u = static_cast<int>(std::clamp(fu, 0.0, static_cast<double>(config.width - 1)));
  px.v = static_cast<int>(std::clamp(fv, 0.0, static_cast<double>(config.height - 1)));
  return px;
}

std::size_t RangeImage::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

std::optional<std::size_t> RangeImage::unproject(int u, int v) const {
  if (u < 0 || u >= width() || v < 0 || v >= height()) {
    throw DomainError("unproject: pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside " +
                          std::to_string(width()) + "x" + std::to_string(height()),
                      static_cast<std::size_t>(std::max(v, 0)) * width() + std::max(u, 0));
  }
  const std::size_t k = pixel(u, v);
  if (!mask[k]) return std::nullopt;
  return static_cast<std::size_t>(point_index[k]);
}

RangeImage spherical_project(const PointCloud& cloud, const ProjectionConfig& config) {
  config.validate();
  RangeImage img;
  img.config = config;
  const std::size_t n = static_cast<std::size_t>(config.height) * config.width;
  img.reflectance.assign(n, 0.0);
  img.range.assign(n, 0.0);
  img.mask.assign(n, 0);
  img.point_index.assign(n, -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (p.range() == 0.0) {
      ++img.skipped_origin;
      continue;
    }
    const auto px = project_point(p, config);
    if (!px) {
      ++img.outside_fov;
      continue;
    }
    const std::size_t k = img.pixel(px->u, px->v);
    const double r = p.range();
    // Ties keep the earlier point.
    if (img.mask[k] && img.range[k] <= r) continue;
    img.mask[k] = 1;
    img.range[k] = r;
    img.reflectance[k] = p.r;
    img.point_index[k] = static_cast<std::int64_t>(i);
  }
  return img;
}

Tensor range_input(const RangeImage& img) {
  const std::size_t n = img.mask.size();
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (img.mask[k]) {
      mean += img.reflectance[k];
      ++count;
    }
  }
  double inv_std = 1.0;
  if (count > 0) {
    mean /= count;
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (img.mask[k]) var += (img.reflectance[k] - mean) * (img.reflectance[k] - mean);
    var /= count;
    if (var > 0.0) inv_std = 1.0 / std::sqrt(var);
  }
  std::vector<double> data(n * 2, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!img.mask[k]) continue;
    data[2 * k] = (img.reflectance[k] - mean) * inv_std;
    data[2 * k + 1] = 1.0;
  }
  return Tensor::from({n, 2}, std::move(data));
}

std::vector<std::uint8_t> cell_mask(const RangeImage& img, int stride) {
  if (stride < 1) throw ConfigError("cell_mask: stride must be positive");
  const int h = (img.height() + stride - 1) / stride;
  const int w = (img.width() + stride - 1) / stride;
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(h) * w, 0);
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u)
      if (img.mask[img.pixel(u, v)]) cells[static_cast<std::size_t>(v / stride) * w + u / stride] = 1;
  return cells;
}

std::string to_pgm16(const std::vector<double>& values, int height, int width, double value_max) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionError("to_pgm16: " + std::to_string(values.size()) + " values for " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  out.reserve(out.size() + values.size() * 2);
  for (double v : values) {
    const double s = value_max > 0.0 ? std::clamp(v / value_max, 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(s * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xFF));
  }
  return out;
}

}  // namespace grc
