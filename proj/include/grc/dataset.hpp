// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grc/config_io.hpp"
#include "grc/point_cloud.hpp"
#include "grc/scene.hpp"

namespace grc {

/// Seed of scene `index` in a dataset generated with `seed`:
/// Rng(seed).split("scene").split(index).next().
std::uint64_t scene_seed(std::uint64_t seed, std::size_t index);

std::vector<PointCloud> generate_scenes(const SceneSpec& spec, std::size_t count, std::uint64_t seed);

struct Dataset {
  int num_classes = 0;
  std::vector<std::string> names;
  std::vector<PointCloud> scenes;
};

/// Writes velodyne/NNNNNN.bin, labels/NNNNNN.label and manifest.json under
/// `dir` and returns the manifest.
Json write_dataset(const std::filesystem::path& dir, const SceneSpec& spec, std::size_t count,
                   std::uint64_t seed);

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace grc
