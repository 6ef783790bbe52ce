// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "grc/bytes.hpp"
#include "grc/errors.hpp"
#include "grc/histogram.hpp"
#include "grc/kitti_io.hpp"
#include "grc/rng.hpp"
#include "grc/scene.hpp"
#include "grc/weather.hpp"

using namespace grc;

namespace {

Bytes floats_le(std::initializer_list<float> values) {
  Bytes out;
  for (float f : values) store_le<float>(out, f);
  return out;
}

Bytes words_le(std::initializer_list<std::uint32_t> values) {
  Bytes out;
  for (std::uint32_t w : values) store_le<std::uint32_t>(out, w);
  return out;
}

PointCloud random_cloud(std::size_t n, Rng& rng, double min_range, double max_range, double reflectance) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = rng.uniform(min_range, max_range);
    const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double el = rng.uniform(-0.3, 0.05);
    c.points.push_back({d * std::cos(el) * std::cos(az), d * std::cos(el) * std::sin(az), d * std::sin(el),
                        reflectance});
    c.labels.push_back(static_cast<int>(i % 3));
  }
  return c;
}

// Slab-method ray/axis-aligned-box intersection; returns the entry distance.
std::optional<double> slab_hit(const std::array<double, 3>& dir, const std::array<double, 3>& lo,
                               const std::array<double, 3>& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (lo[a] > 0.0 || hi[a] < 0.0) return std::nullopt;
      continue;
    }
    double ta = lo[a] / dir[a], tb = hi[a] / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

}  // namespace

TEST_SUITE("lidar_io") {
  TEST_CASE("parse_kitti_bin decodes little-endian quadruples") {
    const PointCloud c = parse_kitti_bin(floats_le({1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.0f, 4.0f, 0.25f}));
    REQUIRE(c.size() == 2);
    CHECK(c.points[0].x == 1.0);
    CHECK(c.points[0].z == 3.0);
    CHECK(c.points[0].r == 0.5);
    CHECK(c.points[1].x == -1.0);
    CHECK(c.points[1].r == 0.25);
    CHECK(write_kitti_bin(c) == floats_le({1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.0f, 4.0f, 0.25f}));
  }

  TEST_CASE("parse_kitti_bin edge cases") {
    CHECK(parse_kitti_bin(Bytes{}).empty());
    CHECK(write_kitti_bin(PointCloud{}).empty());
    Bytes b = floats_le({1, 2, 3, 4});
    b.push_back(std::byte{0});
    try {
      parse_kitti_bin(b);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 16);
    }
    try {
      parse_kitti_bin(floats_le({0, 0, 0, 0, 1, std::numeric_limits<float>::quiet_NaN(), 0, 0}));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 1);
    }
  }

  TEST_CASE("negative reflectance is clamped and counted") {
    ParseStats stats;
    const PointCloud c = parse_kitti_bin(floats_le({0, 0, 0, -0.001f, 0, 0, 0, 0.5f}), &stats);
    CHECK(c.points[0].r == 0.0);
    CHECK(stats.negative_reflectance_clamped == 1);
  }

  TEST_CASE("parse_kitti_label keeps the low half-word") {
    const auto labels = parse_kitti_label(words_le({0x0001000Au}), 1);
    CHECK(labels == std::vector<int>{10});
    CHECK(parse_kitti_label(Bytes{}, 0).empty());
    CHECK_THROWS_AS(parse_kitti_label(words_le({1, 2}), 3), ParseError);
  }

  TEST_CASE("class map remap round-trip") {
    ClassMap map;
    map.table = {{40, 0}, {10, 1}, {50, 2}};
    const Bytes raw = words_le({40, 10, 50, 10, 0x00070032u});
    const auto ids = parse_kitti_label(raw, 5, map);
    CHECK(ids == std::vector<int>{0, 1, 2, 1, 2});
    const auto again = parse_kitti_label(write_kitti_label(ids, map), 5, map);
    CHECK(again == ids);
    CHECK(parse_kitti_label(words_le({99}), 1, map) == std::vector<int>{map.unmapped});
  }

  TEST_CASE("ground-only scene labels every point as ground") {
    SceneSpec spec;
    spec.num_classes = 2;
    ScenePrimitive ground;
    ground.kind = ShapeKind::kGround;
    ground.label = 1;
    ground.cz = -1.73;
    spec.objects.push_back(ground);
    spec.sensor.beams = 16;
    spec.sensor.azimuth_steps = 64;
    const PointCloud c = generate_scene(spec);
    REQUIRE(!c.empty());
    CHECK(std::all_of(c.labels.begin(), c.labels.end(), [](int l) { return l == 1; }));
  }

  TEST_CASE("generate_scene is deterministic in its seed") {
    SceneSpec spec;
    ScenePrimitive ground;
    spec.objects.push_back(ground);
    ObjectTemplate t;
    t.label = 1;
    t.min_count = 2;
    t.max_count = 4;
    t.size_x = {2.0, 3.0};
    spec.templates.push_back(t);
    spec.seed = 42;
    spec.sensor.azimuth_steps = 128;
    const PointCloud a = generate_scene(spec), b = generate_scene(spec);
    CHECK(write_kitti_bin(a) == write_kitti_bin(b));
    CHECK(a.labels == b.labels);
    spec.seed = 43;
    CHECK(write_kitti_bin(generate_scene(spec)) != write_kitti_bin(a));
  }

  TEST_CASE("box returns lie on its faces within the jitter bound") {
    SceneSpec spec;
    spec.num_classes = 2;
    ScenePrimitive box;
    box.kind = ShapeKind::kBox;
    box.label = 1;
    box.cx = 8.0;
    box.cy = 1.0;
    box.cz = -0.5;
    box.sx = 4.0;
    box.sy = 2.0;
    box.sz = 1.5;
    spec.objects.push_back(box);
    spec.sensor.range_noise = 0.02;
    spec.sensor.azimuth_steps = 512;
    spec.sensor.beams = 32;
    const PointCloud c = generate_scene(spec);
    REQUIRE(c.size() > 50);
    const std::array<double, 3> lo{6.0, 0.0, -1.25}, hi{10.0, 2.0, 0.25};
    double worst = 0.0;
    for (const Point& p : c.points) {
      const double d = p.range();
      const auto hit = slab_hit({p.x / d, p.y / d, p.z / d}, lo, hi);
      REQUIRE(hit.has_value());
      worst = std::max(worst, std::abs(d - *hit));
    }
    CHECK(worst <= 3.0 * spec.sensor.range_noise + 1e-9);
  }

  TEST_CASE("invalid scene specs are rejected") {
    SceneSpec spec;
    spec.num_classes = 1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.num_classes = 4;
    spec.sensor.fov_up_deg = -30.0;
    CHECK_THROWS_AS(generate_scene(spec), ConfigError);
    spec.sensor.fov_up_deg = 3.0;
    spec.sensor.beams = 1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }

  TEST_CASE("null weather is the identity") {
    Rng rng(3);
    const PointCloud c = random_cloud(500, rng, 1, 40, 0.4);
    const PointCloud out = corrupt_weather(c, WeatherParams{}, 9);
    CHECK(write_kitti_bin(out) == write_kitti_bin(c));
    CHECK(out.labels == c.labels);
  }

  TEST_CASE("dense fog shifts reflectance far more than distance") {
    Rng rng(4);
    const PointCloud c = random_cloud(20000, rng, 1, 40, 0.5);
    const PointCloud out = corrupt_weather(c, "fog_dense", 17);
    double mean_in = 0.0, mean_out = 0.0;
    for (const Point& p : c.points) mean_in += p.r / c.size();
    for (const Point& p : out.points) mean_out += p.r / out.size();
    CHECK(mean_out < mean_in);
    const double refl = normalized_shift(c, out, HistField::kReflectance);
    const double dist = normalized_shift(c, out, HistField::kDistance);
    CHECK(refl > 0.0);
    CHECK(dist < 0.1 * refl);
  }

  TEST_CASE("drop fraction 0.5 keeps a binomial share") {
    Rng rng(5);
    const PointCloud c = random_cloud(10000, rng, 1, 40, 0.5);
    WeatherParams p;
    p.drop_fraction = 0.5;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t n = corrupt_weather(c, p, seed).size();
      CHECK(n >= 4700);
      CHECK(n <= 5300);
      total += static_cast<double>(n);
    }
    CHECK(std::abs(total / 10.0 - 5000.0) < 100.0);
  }

  TEST_CASE("survivors keep labels and move at most the jitter bound") {
    Rng rng(6);
    const PointCloud c = random_cloud(3000, rng, 1, 40, 0.5);
    for (const std::string& kind : weather_kinds()) {
      const PointCloud out = corrupt_weather(c, kind, 23);
      const double bound = builtin_weather_presets().at(kind).jitter + 1e-12;
      std::size_t j = 0, clutter = 0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.labels[i] == kNoiseLabel) {
          ++clutter;
          continue;
        }
        auto moved = [&](std::size_t k) {
          const Point& a = c.points[k];
          const Point& b = out.points[i];
          return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
        };
        while (j < c.size() && moved(j) > bound) ++j;
        REQUIRE(j < c.size());
        CHECK(out.labels[i] == c.labels[j]);
        ++j;
      }
      if (kind == "rain" || kind == "snow") CHECK(clutter > 0);
    }
    CHECK_THROWS_AS(corrupt_weather(c, "hail", 1), ConfigError);
  }

  TEST_CASE("histogram") {
    const Histogram h = histogram(std::vector<double>{5.0}, 2, 0.0, 10.0);
    CHECK(h.counts == std::vector<std::size_t>{0, 1});
    PointCloud one;
    one.points.push_back({3.0, 4.0, 0.0, 0.2});
    CHECK(histogram(one, HistField::kDistance, 2, 10.0).counts == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(histogram(PointCloud{}, HistField::kDistance, 4), DataError);
    Rng rng(7);
    const PointCloud c = random_cloud(777, rng, 0.5, 30, 0.3);
    for (std::size_t bins : {1, 7, 64}) {
      CHECK(histogram(c, HistField::kDistance, bins).total() == 777);
      CHECK(histogram(c, HistField::kReflectance, bins).total() == 777);
    }
  }

  TEST_CASE("uniform distances pass a chi-square test") {
    Rng rng(8);
    std::vector<double> values(20000);
    for (double& v : values) v = rng.uniform(0.0, 50.0);
    const Histogram h = histogram(values, 20, 0.0, 50.0);
    // Upper 1% point of chi-square with 19 degrees of freedom.
    CHECK(chi_square_uniform(h) < 36.191);
  }
}
