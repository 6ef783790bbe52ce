// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "grc/config_io.hpp"
#include "grc/errors.hpp"
#include "grc/metrics.hpp"
#include "grc/ops.hpp"

namespace grc {

SgdMomentum::SgdMomentum(std::vector<NamedTensor> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  for (const auto& p : params_) velocity_.emplace_back(p.tensor.numel(), 0.0);
}

void SgdMomentum::step(double lr) {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad_buffer()) {
      if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor t = params_[i].tensor;
    auto values = t.mutable_data();
    auto& v = velocity_[i];
    const bool has_grad = t.has_grad();
    const std::span<const double> g = has_grad ? t.grad_buffer() : std::span<const double>();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double grad = has_grad ? g[j] : 0.0;
      v[j] = momentum_ * v[j] + (grad + weight_decay_ * values[j]);
      values[j] -= lr * v[j];
    }
  }
}

void SgdMomentum::zero_grad() {
  for (auto& p : params_) Tensor(p.tensor).zero_grad();
}

double SgdMomentum::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad_buffer()) s += g * g;
  }
  return std::sqrt(s);
}

double onecycle_lr(std::size_t step, std::size_t total, double max_lr, double pct_up, double div, double final_div) {
  if (total == 0 || step >= total) {
    throw ConfigError("onecycle_lr: step " + std::to_string(step) + " outside [0, " + std::to_string(total) + ")");
  }
  const double start = max_lr / div, end = max_lr / final_div;
  auto cosine = [](double from, double to, double t) { return to + (from - to) * (1.0 + std::cos(std::numbers::pi * t)) / 2.0; };
  auto up = static_cast<std::size_t>(std::floor(pct_up * static_cast<double>(total)));
  if (total > 1) up = std::clamp<std::size_t>(up, 1, total - 1);
  if (step < up) return cosine(start, max_lr, static_cast<double>(step) / static_cast<double>(up));
  const std::size_t down = total - 1 - up;
  if (down == 0) return max_lr;
  return cosine(max_lr, end, static_cast<double>(step - up) / static_cast<double>(down));
}

PointCloud augment(const PointCloud& cloud, const AugmentConfig& config, Rng& rng) {
  if (!config.enabled) return cloud;
  const double yaw = config.rotate ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
  const double fx = config.flip && rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double fy = config.flip && rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double s = rng.uniform(config.scale_min, config.scale_max);
  const double drop = rng.uniform(0.0, config.max_drop);
  const double c = std::cos(yaw), sn = std::sin(yaw);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool keep = rng.uniform() >= drop;
    if (!keep) continue;
    const Point& p = cloud.points[i];
    const double x = fx * p.x, y = fy * p.y;
    out.points.push_back({s * (c * x - sn * y), s * (sn * x + c * y), s * p.z, p.r});
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  if (out.empty()) return cloud;
  return out;
}

void TrainConfig::validate() const {
  if (steps == 0) throw ConfigError("train: steps must be positive");
  if (!(max_lr > 0.0)) throw ConfigError("train: max_lr must be positive");
  if (!(pct_up > 0.0 && pct_up < 1.0)) throw ConfigError("train: pct_up must be in (0, 1)");
  if (!(div > 0.0) || !(final_div > 0.0)) throw ConfigError("train: div and final_div must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be non-negative");
  if (grad_accum == 0) throw ConfigError("train: grad_accum must be positive");
  if (!(augment.scale_min > 0.0) || augment.scale_max < augment.scale_min) {
    throw ConfigError("train: bad augmentation scale interval");
  }
  if (augment.max_drop < 0.0 || augment.max_drop >= 1.0) throw ConfigError("train: max_drop must be in [0, 1)");
}

std::string log_csv(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "step,loss,ce,cic,lr,grad_norm\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.loss << ',' << r.ce << ',' << r.cic << ',' << r.lr << ',' << r.grad_norm << '\n';
  }
  return out.str();
}

Trainer::Trainer(GrcModel& model, const std::vector<PointCloud>& scenes, TrainConfig config)
    : model_(model),
      scenes_(scenes),
      config_(std::move(config)),
      optimizer_(model.parameters(), config_.momentum, config_.weight_decay) {
  config_.validate();
  if (scenes_.empty()) throw DataError("train: no training scenes");
  for (std::size_t i = 0; i < scenes_.size(); ++i) {
    if (!scenes_[i].has_labels()) throw DataError("train: scene " + std::to_string(i) + " has no labels");
    scenes_[i].validate();
  }
}

std::size_t Trainer::steps_per_epoch() const {
  if (config_.steps_per_epoch) return config_.steps_per_epoch;
  return std::max<std::size_t>(1, scenes_.size() / config_.grad_accum);
}

std::size_t Trainer::scene_for_sample(std::size_t sample) const {
  // Scenes are visited in a fresh seeded permutation every pass.
  const std::size_t n = scenes_.size();
  const std::size_t pass = sample / n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(config_.seed).split("order").split(static_cast<std::uint64_t>(pass));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order[sample % n];
}

LogRow Trainer::step() {
  const std::size_t total = config_.steps;
  if (state_.step >= total) throw ConfigError("train: all steps already taken");
  const double lr = onecycle_lr(state_.step, total, config_.max_lr, config_.pct_up, config_.div, config_.final_div);
  const double beta = model_.config().beta;
  optimizer_.zero_grad();
  LogRow row;
  row.step = state_.step;
  row.lr = lr;
  const double inv = 1.0 / static_cast<double>(config_.grad_accum);
  for (std::size_t a = 0; a < config_.grad_accum; ++a) {
    const std::size_t sample = state_.samples + a;
    Rng rng = Rng(config_.seed).split("sample").split(static_cast<std::uint64_t>(sample));
    Rng aug_rng = rng.split("augment");
    Rng noise_rng = rng.split("noise");
    const PointCloud cloud = augment(scenes_[scene_for_sample(sample)], config_.augment, aug_rng);
    const ForwardResult fr = model_.forward(cloud, Mode::kTrain, &noise_rng);
    const Tensor ce = cross_entropy(fr.logits, cloud.labels);
    const Tensor loss = beta == 0.0 ? ce : add(ce, scale(fr.cic, beta));
    const double lv = loss.item();
    if (!std::isfinite(lv)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(state_.step));
    }
    backward(config_.grad_accum == 1 ? loss : scale(loss, inv));
    row.loss += lv * inv;
    row.ce += ce.item() * inv;
    row.cic += fr.cic.item() * inv;
  }
  row.grad_norm = optimizer_.grad_norm();
  optimizer_.step(lr);
  optimizer_.zero_grad();
  state_.samples += config_.grad_accum;
  ++state_.step;
  log_.push_back(row);
  return row;
}

std::vector<LogRow> Trainer::run(const std::function<void(std::size_t epoch)>& on_epoch) {
  const std::size_t per_epoch = steps_per_epoch();
  while (state_.step < config_.steps) {
    step();
    if (on_epoch && (state_.step % per_epoch == 0 || state_.step == config_.steps)) {
      on_epoch((state_.step + per_epoch - 1) / per_epoch);
    }
  }
  return log_;
}

std::vector<NamedArray> model_arrays(const GrcModel& model) {
  std::vector<NamedArray> arrays;
  for (const auto& p : model.parameters()) {
    arrays.push_back({p.name, p.tensor.shape(), {p.tensor.data().begin(), p.tensor.data().end()}});
  }
  for (const auto& b : model.buffers()) {
    arrays.push_back({"buffer/" + b.name, b.tensor.shape(), {b.tensor.data().begin(), b.tensor.data().end()}});
  }
  return arrays;
}

namespace {

void copy_into(const NamedTensor& dst, const NamedArray& src) {
  if (src.shape != dst.tensor.shape()) {
    throw ParseError("checkpoint: '" + src.name + "' has shape " + shape_str(src.shape) + ", model expects " +
                         shape_str(dst.tensor.shape()),
                     0);
  }
  auto out = Tensor(dst.tensor).mutable_data();
  std::copy(src.values.begin(), src.values.end(), out.begin());
}

}  // namespace

void load_model_arrays(GrcModel& model, const std::vector<NamedArray>& arrays) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  auto take = [&by_name](const std::string& name) -> const NamedArray& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("checkpoint: missing array '" + name + "'", 0);
    return *it->second;
  };
  for (const auto& p : model.parameters()) copy_into(p, take(p.name));
  for (const auto& b : model.buffers()) copy_into(b, take("buffer/" + b.name));
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::vector<NamedArray> arrays = model_arrays(model_);
  const auto& params = optimizer_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    arrays.push_back({"momentum/" + params[i].name, params[i].tensor.shape(), optimizer_.velocity()[i]});
  }
  save_grcw(path, arrays);
  Json sidecar = {
      {"format", "grc-checkpoint"},
      {"version", 1},
      {"model", to_json(model_.config())},
      {"train", to_json(config_)},
      {"state", {{"step", state_.step}, {"samples", state_.samples}}},
      {"rng", {{"algorithm", "splitmix64"}, {"seed", config_.seed}, {"samples_consumed", state_.samples}}},
  };
  save_json_file(path.string() + ".json", sidecar);
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  const std::vector<NamedArray> arrays = load_grcw(path);
  load_model_arrays(model_, arrays);
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  const auto& params = optimizer_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = by_name.find("momentum/" + params[i].name);
    if (it == by_name.end()) throw ParseError("checkpoint: missing momentum for '" + params[i].name + "'", 0);
    if (it->second->values.size() != optimizer_.velocity()[i].size()) {
      throw ParseError("checkpoint: momentum size mismatch for '" + params[i].name + "'", 0);
    }
    optimizer_.velocity()[i] = it->second->values;
  }
  const Json sidecar = load_json_file(path.string() + ".json");
  state_.step = sidecar.at("state").at("step").get<std::size_t>();
  state_.samples = sidecar.at("state").at("samples").get<std::size_t>();
}

GrcModel load_model(const std::filesystem::path& path) {
  const Json sidecar = load_json_file(path.string() + ".json");
  if (!sidecar.contains("model")) throw ParseError(path.string() + ".json: no model section", 0);
  GrcModel model(model_config_from_json(sidecar.at("model")));
  load_model_arrays(model, load_grcw(path));
  return model;
}

std::vector<int> predict(const GrcModel& model, const PointCloud& cloud) {
  NoGradGuard guard;
  return argmax_rows(model.forward(cloud, Mode::kEval).logits);
}

}  // namespace grc
