// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "grc/cic.hpp"
#include "grc/fusion.hpp"
#include "grc/range_encoder.hpp"
#include "grc/sparse_conv.hpp"

namespace grc {

struct ModelConfig {
  int num_classes = 4;
  double voxel_size = 0.05;
  GeoEncoderConfig geo;
  RefEncoderConfig ref;
  ProjectionConfig projection;
  std::size_t query_tokens = 8;
  std::size_t heads = 4;
  double beta = 0.01;       // weight of the complementarity loss
  double tau = 10.0;        // cap on each cross KL term; infinity disables it
  double sigma_floor = 1e-4;
  std::size_t decoder_hidden = 32;
  bool decoder_skip = true;  // also feed first-block voxel features to the decoder

  bool geometry_only = false;
  bool unified_input = false;  // reflectance as a fourth voxel channel
  bool reflectance_add_only = false;
  bool use_cic = true;
  bool use_local_fusion = true;
  bool use_global_fusion = true;

  std::uint64_t seed = 0;  // parameter initialization

  std::size_t width() const { return geo.channels.back(); }
  bool uses_reflectance_branch() const { return !geometry_only; }
  void validate() const;
};

/// Ablation rows: "unified", "gb", "gb+rb", "+cic", "+lf", "+gf" and "full"
/// (the last two are the same model).
const std::vector<std::string>& ablation_names();
void apply_ablation(ModelConfig& config, const std::string& name);
std::string ablation_of(const ModelConfig& config);

enum class Mode { kTrain, kEval };

struct ForwardOptions {
  Rng* noise = nullptr;        // reparameterization noise; null means eps = 0
  bool update_stats = false;   // fold batch statistics into running norms
};

struct ForwardDiagnostics {
  std::size_t points = 0;
  std::size_t voxels = 0;         // coarse, after the geometric encoder
  std::size_t valid_cells = 0;
  std::size_t pairs = 0;
  std::size_t empty_pair_sets = 0;
  bool degraded = false;          // reflectance branch had nothing to contribute
  double mean_alpha = 0.0;
};

struct ForwardResult {
  Tensor logits;  // [n x C]
  Tensor cic;     // scalar; 0 when the complementarity loss is off
  ForwardDiagnostics diag;
};

class GrcModel {
 public:
  explicit GrcModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// Train mode draws reparameterization noise from `noise` and updates the
  /// running statistics of the geometric branch; eval mode is a pure function
  /// of weights and input.
  ForwardResult forward(const PointCloud& cloud, Mode mode, Rng* noise = nullptr) const;
  ForwardResult forward(const PointCloud& cloud, const ForwardOptions& options) const;

  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> buffers() const;

  GeoEncoder geo;
  RefEncoder ref;
  DistributionHead geo_head;
  DistributionHead ref_head;
  MProjection geo_projection;
  MProjection ref_projection;
  Tensor queries;  // [m x c]
  AttentionParams stage1;
  AttentionParams stage2;
  Linear decoder1;
  Linear decoder2;

 private:
  ModelConfig config_;
};

/// Mean cross-entropy over labeled points plus beta * cic.
Tensor total_loss(const Tensor& logits, std::span<const int> labels, const Tensor& cic, double beta);

}  // namespace grc
