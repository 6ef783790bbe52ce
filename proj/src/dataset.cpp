// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/dataset.hpp"

#include <cstdio>

#include "grc/bytes.hpp"
#include "grc/errors.hpp"
#include "grc/kitti_io.hpp"
#include "grc/rng.hpp"

namespace grc {

namespace fs = std::filesystem;

std::uint64_t scene_seed(std::uint64_t seed, std::size_t index) {
  return Rng(seed).split("scene").split(static_cast<std::uint64_t>(index)).next();
}

std::vector<PointCloud> generate_scenes(const SceneSpec& spec, std::size_t count, std::uint64_t seed) {
  spec.validate();
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec s = spec;
    s.seed = scene_seed(seed, i);
    out.push_back(generate_scene(s));
  }
  return out;
}

namespace {

std::string stem(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

}  // namespace

Json write_dataset(const fs::path& dir, const SceneSpec& spec, std::size_t count, std::uint64_t seed) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!ec && count > 0) fs::create_directories(dir / "velodyne", ec);
  if (!ec && count > 0) fs::create_directories(dir / "labels", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  Json scenes = Json::array();
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec s = spec;
    s.seed = scene_seed(seed, i);
    const PointCloud cloud = generate_scene(s);
    const std::string bin = "velodyne/" + stem(i) + ".bin";
    const std::string label = "labels/" + stem(i) + ".label";
    write_file_atomic(dir / bin, write_kitti_bin(cloud));
    write_file_atomic(dir / label, write_kitti_label(cloud.labels));
    scenes.push_back({{"bin", bin}, {"label", label}, {"points", cloud.size()}, {"seed", s.seed}});
  }
  Json manifest = {
      {"format", "grc-dataset"},
      {"version", 1},
      {"num_classes", spec.num_classes},
      {"seed", seed},
      {"count", count},
      {"spec", to_json(spec)},
      {"scenes", scenes},
  };
  save_json_file(dir / "manifest.json", manifest);
  return manifest;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("data directory " + dir.string() + " does not exist");
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError(manifest_path.string() + " not found");
  const Json manifest = load_json_file(manifest_path);
  Dataset ds;
  try {
    if (manifest.at("format") != "grc-dataset") throw ConfigError(manifest_path.string() + ": not a dataset manifest");
    ds.num_classes = manifest.at("num_classes").get<int>();
    for (const auto& entry : manifest.at("scenes")) {
      const std::string bin = entry.at("bin").get<std::string>();
      const fs::path label = entry.contains("label") ? dir / entry.at("label").get<std::string>() : fs::path();
      PointCloud cloud = label.empty() ? load_kitti_scan(dir / bin)
                                       : load_kitti_scan(dir / bin, label, ClassMap::identity());
      ds.names.push_back(bin);
      ds.scenes.push_back(std::move(cloud));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace grc
