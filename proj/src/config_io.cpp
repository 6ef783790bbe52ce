// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/config_io.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "grc/bytes.hpp"
#include "grc/errors.hpp"

namespace grc {

namespace {

/// Reads keys from one JSON object and remembers which ones were used.
class Fields {
 public:
  Fields(const Json& doc, std::string where, std::vector<std::string>& unknown)
      : doc_(doc), where_(std::move(where)), unknown_(unknown) {
    if (!doc_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }
  Fields(const Fields&) = delete;

  ~Fields() {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!seen_.count(it.key())) unknown_.push_back(path(it.key()));
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const Json* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError(path(key) + ": wrong type");
      }
    }
  }

  /// Numbers, or the strings "inf"/"infinity".
  void get_extended(const std::string& key, double& out) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_string() && (*v == "inf" || *v == "infinity")) {
      out = std::numeric_limits<double>::infinity();
    } else if (v->is_number()) {
      out = v->get<double>();
    } else {
      throw ConfigError(path(key) + ": expected a number or \"inf\"");
    }
  }

  void get_pair(const std::string& key, double& lo, double& hi) {
    const Json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      throw ConfigError(path(key) + ": expected [low, high]");
    }
    lo = (*v)[0].get<double>();
    hi = (*v)[1].get<double>();
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const Json& doc_;
  std::string where_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

void raise_unknown(const std::vector<std::string>& unknown) {
  if (unknown.empty()) return;
  std::string msg = "unknown configuration key";
  msg += unknown.size() > 1 ? "s: " : ": ";
  for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
  throw ConfigError(msg);
}

Json number_or_inf(double v) { return std::isinf(v) ? Json("inf") : Json(v); }

void read_geo(const Json& doc, GeoEncoderConfig& geo, std::vector<std::string>& unknown) {
  Fields f(doc, "model.geo", unknown);
  f.get("in_channels", geo.in_channels);
  f.get("channels", geo.channels);
  f.get("strides", geo.strides);
}

void read_ref(const Json& doc, RefEncoderConfig& ref, std::vector<std::string>& unknown) {
  Fields f(doc, "model.ref", unknown);
  f.get("in_channels", ref.in_channels);
  if (const Json* stages = f.find("stages")) {
    if (!stages->is_array()) throw ConfigError("model.ref.stages: expected an array");
    ref.stages.clear();
    for (std::size_t i = 0; i < stages->size(); ++i) {
      IRStageConfig st;
      Fields s((*stages)[i], "model.ref.stages[" + std::to_string(i) + "]", unknown);
      s.get("channels", st.channels);
      s.get("expansion", st.expansion);
      s.get("stride", st.stride);
      ref.stages.push_back(st);
    }
  }
}

void read_projection(Fields& parent, const std::string& key, ProjectionConfig& p,
                     std::vector<std::string>& unknown) {
  const Json* doc = parent.find(key);
  if (!doc) return;
  Fields f(*doc, parent.path(key), unknown);
  f.get("height", p.height);
  f.get("width", p.width);
  f.get("fov_up_deg", p.fov_up_deg);
  f.get("fov_down_deg", p.fov_down_deg);
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
  const Bytes bytes = read_file_bytes(path);
  const std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

void save_json_file(const std::filesystem::path& path, const Json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

Json to_json(const ModelConfig& c) {
  Json stages = Json::array();
  for (const auto& st : c.ref.stages)
    stages.push_back({{"channels", st.channels}, {"expansion", st.expansion}, {"stride", st.stride}});
  return {
      {"num_classes", c.num_classes},
      {"voxel_size", c.voxel_size},
      {"geo", {{"in_channels", c.geo.in_channels}, {"channels", c.geo.channels}, {"strides", c.geo.strides}}},
      {"ref", {{"in_channels", c.ref.in_channels}, {"stages", stages}}},
      {"projection",
       {{"height", c.projection.height},
        {"width", c.projection.width},
        {"fov_up_deg", c.projection.fov_up_deg},
        {"fov_down_deg", c.projection.fov_down_deg}}},
      {"query_tokens", c.query_tokens},
      {"heads", c.heads},
      {"beta", c.beta},
      {"tau", number_or_inf(c.tau)},
      {"sigma_floor", c.sigma_floor},
      {"decoder_hidden", c.decoder_hidden},
      {"decoder_skip", c.decoder_skip},
      {"geometry_only", c.geometry_only},
      {"unified_input", c.unified_input},
      {"reflectance_add_only", c.reflectance_add_only},
      {"use_cic", c.use_cic},
      {"use_local_fusion", c.use_local_fusion},
      {"use_global_fusion", c.use_global_fusion},
      {"seed", c.seed},
  };
}

ModelConfig model_config_from_json(const Json& doc, ModelConfig c) {
  std::vector<std::string> unknown;
  {
    Fields f(doc, "model", unknown);
    // An ablation name sets the flags first; explicit flags then override.
    std::string ablation;
    f.get("ablation", ablation);
    if (!ablation.empty()) apply_ablation(c, ablation);
    f.get("num_classes", c.num_classes);
    f.get("voxel_size", c.voxel_size);
    if (const Json* g = f.find("geo")) read_geo(*g, c.geo, unknown);
    if (const Json* r = f.find("ref")) read_ref(*r, c.ref, unknown);
    read_projection(f, "projection", c.projection, unknown);
    f.get("query_tokens", c.query_tokens);
    f.get("heads", c.heads);
    f.get("beta", c.beta);
    f.get_extended("tau", c.tau);
    f.get("sigma_floor", c.sigma_floor);
    f.get("decoder_hidden", c.decoder_hidden);
    f.get("decoder_skip", c.decoder_skip);
    f.get("geometry_only", c.geometry_only);
    f.get("unified_input", c.unified_input);
    f.get("reflectance_add_only", c.reflectance_add_only);
    f.get("use_cic", c.use_cic);
    f.get("use_local_fusion", c.use_local_fusion);
    f.get("use_global_fusion", c.use_global_fusion);
    f.get("seed", c.seed);
  }
  raise_unknown(unknown);
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return {
      {"steps", c.steps},
      {"max_lr", c.max_lr},
      {"pct_up", c.pct_up},
      {"div", c.div},
      {"final_div", c.final_div},
      {"momentum", c.momentum},
      {"weight_decay", c.weight_decay},
      {"grad_accum", c.grad_accum},
      {"steps_per_epoch", c.steps_per_epoch},
      {"augment",
       {{"enabled", c.augment.enabled},
        {"rotate", c.augment.rotate},
        {"flip", c.augment.flip},
        {"scale", {c.augment.scale_min, c.augment.scale_max}},
        {"max_drop", c.augment.max_drop}}},
      {"seed", c.seed},
  };
}

TrainConfig train_config_from_json(const Json& doc, TrainConfig c) {
  std::vector<std::string> unknown;
  {
    Fields f(doc, "train", unknown);
    f.get("steps", c.steps);
    f.get("max_lr", c.max_lr);
    f.get("pct_up", c.pct_up);
    f.get("div", c.div);
    f.get("final_div", c.final_div);
    f.get("momentum", c.momentum);
    f.get("weight_decay", c.weight_decay);
    f.get("grad_accum", c.grad_accum);
    f.get("steps_per_epoch", c.steps_per_epoch);
    if (const Json* a = f.find("augment")) {
      Fields g(*a, "train.augment", unknown);
      g.get("enabled", c.augment.enabled);
      g.get("rotate", c.augment.rotate);
      g.get("flip", c.augment.flip);
      g.get_pair("scale", c.augment.scale_min, c.augment.scale_max);
      g.get("max_drop", c.augment.max_drop);
    }
    f.get("seed", c.seed);
  }
  raise_unknown(unknown);
  c.validate();
  return c;
}

Json to_json(const SceneSpec& s) {
  Json objects = Json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"kind", to_string(o.kind)},
                       {"label", o.label},
                       {"reflectance", o.reflectance},
                       {"center", {o.cx, o.cy, o.cz}},
                       {"size", {o.sx, o.sy, o.sz}},
                       {"yaw", o.yaw}});
  }
  Json templates = Json::array();
  for (const auto& t : s.templates) {
    templates.push_back({{"kind", to_string(t.kind)},
                         {"label", t.label},
                         {"reflectance", t.reflectance},
                         {"count", {t.min_count, t.max_count}},
                         {"distance", {t.min_distance, t.max_distance}},
                         {"size_x", {t.size_x[0], t.size_x[1]}},
                         {"size_y", {t.size_y[0], t.size_y[1]}},
                         {"size_z", {t.size_z[0], t.size_z[1]}}});
  }
  const SensorModel& m = s.sensor;
  return {
      {"num_classes", s.num_classes},
      {"ground_height", s.ground_height},
      {"seed", s.seed},
      {"sensor",
       {{"beams", m.beams},
        {"azimuth_steps", m.azimuth_steps},
        {"fov_up_deg", m.fov_up_deg},
        {"fov_down_deg", m.fov_down_deg},
        {"max_range", m.max_range},
        {"range_noise", m.range_noise},
        {"reflectance_noise", m.reflectance_noise},
        {"falloff_distance", m.falloff_distance}}},
      {"objects", objects},
      {"templates", templates},
  };
}

SceneSpec scene_spec_from_json(const Json& doc, SceneSpec s) {
  std::vector<std::string> unknown;
  {
    Fields f(doc, "scene", unknown);
    f.get("num_classes", s.num_classes);
    f.get("ground_height", s.ground_height);
    f.get("seed", s.seed);
    if (const Json* sensor = f.find("sensor")) {
      Fields g(*sensor, "scene.sensor", unknown);
      SensorModel& m = s.sensor;
      g.get("beams", m.beams);
      g.get("azimuth_steps", m.azimuth_steps);
      g.get("fov_up_deg", m.fov_up_deg);
      g.get("fov_down_deg", m.fov_down_deg);
      g.get("max_range", m.max_range);
      g.get("range_noise", m.range_noise);
      g.get("reflectance_noise", m.reflectance_noise);
      g.get("falloff_distance", m.falloff_distance);
    }
    if (const Json* objects = f.find("objects")) {
      if (!objects->is_array()) throw ConfigError("scene.objects: expected an array");
      s.objects.clear();
      for (std::size_t i = 0; i < objects->size(); ++i) {
        Fields g((*objects)[i], "scene.objects[" + std::to_string(i) + "]", unknown);
        ScenePrimitive p;
        std::string kind = "box";
        g.get("kind", kind);
        p.kind = parse_shape_kind(kind);
        g.get("label", p.label);
        g.get("reflectance", p.reflectance);
        std::vector<double> center{p.cx, p.cy, p.cz}, size{p.sx, p.sy, p.sz};
        g.get("center", center);
        g.get("size", size);
        if (center.size() != 3 || size.size() != 3) throw ConfigError(g.path("center/size") + ": expected 3 values");
        p.cx = center[0];
        p.cy = center[1];
        p.cz = center[2];
        p.sx = size[0];
        p.sy = size[1];
        p.sz = size[2];
        g.get("yaw", p.yaw);
        s.objects.push_back(p);
      }
    }
    if (const Json* templates = f.find("templates")) {
      if (!templates->is_array()) throw ConfigError("scene.templates: expected an array");
      s.templates.clear();
      for (std::size_t i = 0; i < templates->size(); ++i) {
        Fields g((*templates)[i], "scene.templates[" + std::to_string(i) + "]", unknown);
        ObjectTemplate t;
        std::string kind = "box";
        g.get("kind", kind);
        t.kind = parse_shape_kind(kind);
        g.get("label", t.label);
        g.get("reflectance", t.reflectance);
        double lo = t.min_count, hi = t.max_count;
        g.get_pair("count", lo, hi);
        t.min_count = static_cast<int>(lo);
        t.max_count = static_cast<int>(hi);
        g.get_pair("distance", t.min_distance, t.max_distance);
        g.get_pair("size_x", t.size_x[0], t.size_x[1]);
        g.get_pair("size_y", t.size_y[0], t.size_y[1]);
        g.get_pair("size_z", t.size_z[0], t.size_z[1]);
        s.templates.push_back(t);
      }
    }
  }
  raise_unknown(unknown);
  s.validate();
  return s;
}

Json to_json(const WeatherPresets& presets) {
  Json out = Json::object();
  for (const auto& [name, p] : presets) {
    out[name] = {{"attenuation", p.attenuation},
                 {"reflectance_noise", p.reflectance_noise},
                 {"drop_fraction", p.drop_fraction},
                 {"clutter_fraction", p.clutter_fraction},
                 {"clutter_range", {p.clutter_min_range, p.clutter_max_range}},
                 {"clutter_reflectance", {p.clutter_min_reflectance, p.clutter_max_reflectance}},
                 {"jitter", p.jitter}};
  }
  return {{"version", 1}, {"presets", out}};
}

WeatherPresets weather_presets_from_json(const Json& doc) {
  std::vector<std::string> unknown;
  WeatherPresets presets;
  {
    Fields f(doc, "corruption", unknown);
    int version = 1;
    f.get("version", version);
    if (version != 1) throw ConfigError("corruption: unsupported version " + std::to_string(version));
    const Json* table = f.find("presets");
    if (!table || !table->is_object()) throw ConfigError("corruption.presets: expected an object");
    for (auto it = table->begin(); it != table->end(); ++it) {
      WeatherParams p;
      Fields g(it.value(), "corruption.presets." + it.key(), unknown);
      g.get("attenuation", p.attenuation);
      g.get("reflectance_noise", p.reflectance_noise);
      g.get("drop_fraction", p.drop_fraction);
      g.get("clutter_fraction", p.clutter_fraction);
      g.get_pair("clutter_range", p.clutter_min_range, p.clutter_max_range);
      g.get_pair("clutter_reflectance", p.clutter_min_reflectance, p.clutter_max_reflectance);
      g.get("jitter", p.jitter);
      p.validate();
      presets[it.key()] = p;
    }
  }
  raise_unknown(unknown);
  return presets;
}

ClassMap class_map_from_json(const Json& doc) {
  std::vector<std::string> unknown;
  ClassMap map;
  {
    Fields f(doc, "class_map", unknown);
    f.get("unmapped", map.unmapped);
    const Json* table = f.find("map");
    if (!table || !table->is_object()) throw ConfigError("class_map.map: expected an object");
    for (auto it = table->begin(); it != table->end(); ++it) {
      std::size_t used = 0;
      unsigned long raw = 0;
      try {
        raw = std::stoul(it.key(), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != it.key().size() || raw > 0xFFFF || !it.value().is_number_integer()) {
        throw ConfigError("class_map.map: bad entry '" + it.key() + "'");
      }
      map.table[static_cast<std::uint16_t>(raw)] = it.value().get<int>();
    }
  }
  raise_unknown(unknown);
  return map;
}

}  // namespace grc
