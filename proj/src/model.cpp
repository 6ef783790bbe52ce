// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/model.hpp"

#include <algorithm>
#include <cmath>

#include "grc/errors.hpp"
#include "grc/ops.hpp"

namespace grc {

void ModelConfig::validate() const {
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (!(voxel_size > 0.0)) throw ConfigError("model: voxel_size must be positive");
  geo.validate();
  projection.validate();
  if (unified_input && !geometry_only) throw ConfigError("model: unified_input requires geometry_only");
  const std::size_t expected_in = unified_input ? 4 : 3;
  if (geo.in_channels != expected_in) {
    throw ConfigError("model: geometric input width must be " + std::to_string(expected_in) + ", got " +
                      std::to_string(geo.in_channels));
  }
  if (geometry_only) {
    if (use_cic || use_local_fusion || use_global_fusion || reflectance_add_only) {
      throw ConfigError("model: geometry_only excludes cic, fusion and reflectance_add_only");
    }
  } else {
    ref.validate();
    if (ref.out_channels() != width()) {
      throw ConfigError("model: reflectance width " + std::to_string(ref.out_channels()) +
                        " differs from geometric width " + std::to_string(width()));
    }
    if (reflectance_add_only == use_local_fusion) {
      throw ConfigError("model: with both branches exactly one of reflectance_add_only and use_local_fusion must be set");
    }
  }
  if (use_local_fusion && !use_cic) throw ConfigError("model: use_local_fusion requires use_cic");
  if (use_global_fusion && !use_local_fusion) throw ConfigError("model: use_global_fusion requires use_local_fusion");
  if (query_tokens == 0) throw ConfigError("model: query_tokens must be positive");
  if (heads == 0 || width() % heads != 0) throw ConfigError("model: width must be divisible by heads");
  if (!(tau > 0.0)) throw ConfigError("model: tau must be positive");
  if (!(beta >= 0.0)) throw ConfigError("model: beta must be non-negative");
  if (!(sigma_floor > 0.0)) throw ConfigError("model: sigma_floor must be positive");
  if (decoder_hidden == 0) throw ConfigError("model: decoder_hidden must be positive");
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names{"unified", "gb", "gb+rb", "+cic", "+lf", "+gf", "full"};
  return names;
}

void apply_ablation(ModelConfig& c, const std::string& name) {
  auto set = [&c](bool geo_only, bool unified, bool add_only, bool cic, bool lf, bool gf) {
    c.geometry_only = geo_only;
    c.unified_input = unified;
    c.reflectance_add_only = add_only;
    c.use_cic = cic;
    c.use_local_fusion = lf;
    c.use_global_fusion = gf;
    c.geo.in_channels = unified ? 4 : 3;
  };
  if (name == "unified") set(true, true, false, false, false, false);
  else if (name == "gb") set(true, false, false, false, false, false);
  else if (name == "gb+rb") set(false, false, true, false, false, false);
  else if (name == "+cic") set(false, false, true, true, false, false);
  else if (name == "+lf") set(false, false, false, true, true, false);
  else if (name == "+gf" || name == "full") set(false, false, false, true, true, true);
  else throw ConfigError("unknown ablation '" + name + "'");
}

std::string ablation_of(const ModelConfig& c) {
  if (c.geometry_only) return c.unified_input ? "unified" : "gb";
  if (c.reflectance_add_only) return c.use_cic ? "+cic" : "gb+rb";
  return c.use_global_fusion ? "full" : "+lf";
}

GrcModel::GrcModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const Rng root(config_.seed);
  Rng geo_rng = root.split("geo");
  geo = GeoEncoder(config_.geo, geo_rng);
  const std::size_t c = config_.width();
  std::size_t fused_width = c;
  if (config_.uses_reflectance_branch()) {
    Rng ref_rng = root.split("ref");
    ref = RefEncoder(config_.ref, ref_rng);
  }
  if (config_.use_cic) {
    Rng head_rng = root.split("heads");
    geo_head = DistributionHead(c, c, head_rng);
    ref_head = DistributionHead(c, c, head_rng);
    geo_head.sigma_floor = ref_head.sigma_floor = config_.sigma_floor;
  }
  if (config_.use_global_fusion) {
    Rng attn_rng = root.split("attention");
    geo_projection = MProjection(c);
    ref_projection = MProjection(c);
    queries = normal_parameter({config_.query_tokens, c}, 1.0, attn_rng);
    stage1 = AttentionParams(c, config_.heads, attn_rng);
    stage2 = AttentionParams(c, config_.heads, attn_rng);
    fused_width = 2 * c;
  }
  Rng dec_rng = root.split("decoder");
  const std::size_t skip = config_.decoder_skip ? config_.geo.channels.front() : 0;
  decoder1 = Linear(fused_width + skip, config_.decoder_hidden, dec_rng);
  // Zero classifier: training starts from uniform logits.
  decoder2 = Linear::zeros(config_.decoder_hidden, static_cast<std::size_t>(config_.num_classes));
}

std::vector<NamedTensor> GrcModel::parameters() const {
  std::vector<NamedTensor> params, buffers;
  geo.collect("geo", params, buffers);
  if (config_.uses_reflectance_branch()) ref.collect("ref", params);
  if (config_.use_cic) {
    geo_head.collect("cic.geo", params);
    ref_head.collect("cic.ref", params);
  }
  if (config_.use_global_fusion) {
    geo_projection.collect("global.m_geo", params);
    ref_projection.collect("global.m_ref", params);
    params.push_back({"global.queries", queries});
    stage1.collect("global.stage1", params);
    stage2.collect("global.stage2", params);
  }
  decoder1.collect("decoder.fc1", params);
  decoder2.collect("decoder.fc2", params);
  return params;
}

std::vector<NamedTensor> GrcModel::buffers() const {
  std::vector<NamedTensor> params, buffers;
  geo.collect("geo", params, buffers);
  return buffers;
}

ForwardResult GrcModel::forward(const PointCloud& cloud, Mode mode, Rng* noise) const {
  ForwardOptions options;
  if (mode == Mode::kTrain) {
    options.noise = noise;
    options.update_stats = true;
  }
  return forward(cloud, options);
}

ForwardResult GrcModel::forward(const PointCloud& cloud, const ForwardOptions& options) const {
  if (cloud.empty()) throw DataError("forward: empty point cloud");
  const ModelConfig& cfg = config_;
  ForwardResult result;
  result.diag.points = cloud.size();
  result.cic = Tensor::scalar(0.0);

  const SparseVoxelGrid grid0 = voxelize(cloud, cfg.voxel_size, cfg.unified_input);
  const std::vector<SparseVoxelGrid> grids = geo.forward_all(grid0, options.update_stats);
  const SparseVoxelGrid& coarse = grids.back();
  const Tensor& f_geo = coarse.features;
  const std::size_t v = coarse.size(), c = cfg.width();
  result.diag.voxels = v;

  Tensor fused = f_geo;
  if (cfg.uses_reflectance_branch()) {
    const RangeImage img = spherical_project(cloud, cfg.projection);
    const int stride = ref.total_stride;
    const std::vector<std::uint8_t> valid = cell_mask(img, stride);
    const auto valid_cells = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
    result.diag.valid_cells = valid_cells;

    Tensor f_ref;
    PairedSites pairs;
    if (valid_cells > 0) {
      f_ref = ref.forward(img).data;
      pairs = pair_sites(coarse, cfg.projection, stride, valid);
    }
    result.diag.pairs = pairs.size();
    result.diag.degraded = pairs.empty();
    if (pairs.empty()) ++result.diag.empty_pair_sets;

    FeatureDistribution geo_d, ref_d;
    Tensor m_geo = f_geo, m_ref = f_ref;
    if (cfg.use_cic) {
      geo_d = geo_head.forward(f_geo);
      m_geo = geo_d.mu;
      if (options.noise) m_geo = reparameterize(geo_d, standard_normal(geo_d.mu.shape(), *options.noise));
      if (f_ref) {
        ref_d = ref_head.forward(f_ref);
        m_ref = ref_d.mu;
        if (options.noise) m_ref = reparameterize(ref_d, standard_normal(ref_d.mu.shape(), *options.noise));
      }
      result.cic = pairs.empty() ? Tensor::scalar(0.0) : cic_loss(pairs, geo_d, ref_d, cfg.tau);
    }

    if (cfg.reflectance_add_only) {
      fused = m_geo;
      if (!pairs.empty()) {
        const Tensor summed = add(gather_rows(m_geo, pairs.voxel_rows), gather_rows(m_ref, pairs.cells));
        fused = overwrite_rows(m_geo, pairs.voxel_rows, summed);
      }
    } else {
      // Unpaired voxels keep the geometric mean (alpha = 1).
      Tensor f_local = geo_d.mu;
      if (!pairs.empty()) {
        const LocalFusion lf = local_fuse(geo_d.select(pairs.voxel_rows), ref_d.select(pairs.cells));
        f_local = overwrite_rows(geo_d.mu, pairs.voxel_rows, lf.fused);
        const auto a = lf.alpha.data();
        double sum = 0.0;
        for (double x : a) sum += x;
        result.diag.mean_alpha = sum / static_cast<double>(a.size());
      }
      fused = f_local;
      if (cfg.use_global_fusion) {
        Tensor f_global;
        if (valid_cells > 0) {
          f_global = global_fuse(geo_projection.forward(m_geo), ref_projection.forward(m_ref), queries, stage1,
                                 stage2, valid);
        } else {
          f_global = Tensor::zeros({v, c});
        }
        fused = concat_features(f_local, f_global);
      }
    }
  }

  Tensor per_point = gather_rows(fused, coarse.point_to_voxel);
  if (cfg.decoder_skip) per_point = concat_cols(per_point, devoxelize(grids.front(), cloud.size()));
  result.logits = decoder2.forward(relu(decoder1.forward(per_point)));
  return result;
}

Tensor total_loss(const Tensor& logits, std::span<const int> labels, const Tensor& cic, double beta) {
  const Tensor ce = cross_entropy(logits, labels);
  if (beta == 0.0) return ce;
  return add(ce, scale(cic, beta));
}

}  // namespace grc
