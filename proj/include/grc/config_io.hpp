// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "grc/kitti_io.hpp"
#include "grc/model.hpp"
#include "grc/scene.hpp"
#include "grc/training.hpp"
#include "grc/weather.hpp"

namespace grc {

using Json = nlohmann::ordered_json;

/// Reads a JSON document; IoError if unreadable, ParseError if malformed.
Json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const Json& doc);

// Parsers start from defaults and override the keys present. Unknown keys
// raise ConfigError listing every offending key path.

Json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& doc, ModelConfig base = {});

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& doc, TrainConfig base = {});

Json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const Json& doc, SceneSpec base = {});

Json to_json(const WeatherPresets& presets);
WeatherPresets weather_presets_from_json(const Json& doc);

ClassMap class_map_from_json(const Json& doc);

}  // namespace grc
