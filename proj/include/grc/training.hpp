// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "grc/checkpoint.hpp"
#include "grc/model.hpp"

namespace grc {

/// v <- momentum * v + (grad + weight_decay * p);  p <- p - lr * v.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<NamedTensor> params, double momentum = 0.9, double weight_decay = 1e-4);

  /// Throws DivergenceError naming the first parameter with a non-finite
  /// gradient; nothing is updated in that case.
  void step(double lr);
  void zero_grad();
  /// L2 norm over all parameter gradients.
  double grad_norm() const;

  const std::vector<NamedTensor>& params() const { return params_; }
  std::vector<std::vector<double>>& velocity() { return velocity_; }
  const std::vector<std::vector<double>>& velocity() const { return velocity_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

 private:
  std::vector<NamedTensor> params_;
  std::vector<std::vector<double>> velocity_;
  double momentum_;
  double weight_decay_;
};

/// One-cycle schedule with cosine phases: from max_lr/div up to max_lr over
/// the first floor(pct_up * total) steps, then down to max_lr/final_div at
/// step total - 1.
double onecycle_lr(std::size_t step, std::size_t total, double max_lr, double pct_up = 0.3, double div = 25.0,
                   double final_div = 1e4);

struct AugmentConfig {
  bool enabled = true;
  bool rotate = true;  // uniform yaw about +z
  bool flip = true;    // x and y flipped independently with probability 1/2
  double scale_min = 0.95;
  double scale_max = 1.05;
  double max_drop = 0.1;  // drop fraction drawn uniformly from [0, max_drop]
};

PointCloud augment(const PointCloud& cloud, const AugmentConfig& config, Rng& rng);

struct TrainConfig {
  std::size_t steps = 300;
  double max_lr = 0.05;
  double pct_up = 0.3;
  double div = 25.0;
  double final_div = 1e4;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t grad_accum = 1;  // scenes per optimizer step
  std::size_t steps_per_epoch = 0;  // 0: one pass over the training scenes
  AugmentConfig augment;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double ce = 0.0;
  double cic = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

std::string log_csv(const std::vector<LogRow>& rows);

/// Everything needed to continue a run exactly: weights, buffers, momentum,
/// step counter and the sample counter that drives all training randomness.
struct TrainState {
  std::size_t step = 0;
  std::size_t samples = 0;
};

class Trainer {
 public:
  /// `scenes` must be labeled; the trainer keeps a reference to them.
  Trainer(GrcModel& model, const std::vector<PointCloud>& scenes, TrainConfig config);

  /// One optimizer step over `grad_accum` scenes.
  LogRow step();
  /// Runs until config.steps. `on_epoch` is called after every epoch.
  std::vector<LogRow> run(const std::function<void(std::size_t epoch)>& on_epoch = {});

  const TrainState& state() const { return state_; }
  std::size_t steps_per_epoch() const;
  const TrainConfig& config() const { return config_; }
  const std::vector<LogRow>& log() const { return log_; }

  /// Weight file plus JSON sidecar at `path` and `path` + ".json".
  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  std::size_t scene_for_sample(std::size_t sample) const;

  GrcModel& model_;
  const std::vector<PointCloud>& scenes_;
  TrainConfig config_;
  SgdMomentum optimizer_;
  TrainState state_;
  std::vector<LogRow> log_;
};

/// Arrays for a weight file: parameters by name, buffers under "buffer/",
/// and (optionally) momentum under "momentum/".
std::vector<NamedArray> model_arrays(const GrcModel& model);
void load_model_arrays(GrcModel& model, const std::vector<NamedArray>& arrays);

/// Rebuilds a model from a checkpoint written by Trainer::save_checkpoint.
GrcModel load_model(const std::filesystem::path& path);

/// Eval-mode prediction for one scan.
std::vector<int> predict(const GrcModel& model, const PointCloud& cloud);

}  // namespace grc
