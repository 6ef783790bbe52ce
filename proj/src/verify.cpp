// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include "grc/errors.hpp"
#include "grc/fusion.hpp"
#include "grc/gradcheck.hpp"
#include "grc/ops.hpp"
#include "grc/scene.hpp"

namespace grc {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace oracle {

std::map<VoxelKey, std::vector<double>> dense_conv3d(const SparseVoxelGrid& grid, const Tensor& kernel,
                                                     const Tensor& bias, int stride) {
  const std::size_t cin = kernel.dim(1), cout = kernel.dim(2);
  VoxelKey lo = grid.keys.front(), hi = grid.keys.front();
  for (const auto& k : grid.keys) {
    lo = {std::min(lo.i, k.i), std::min(lo.j, k.j), std::min(lo.k, k.k)};
    hi = {std::max(hi.i, k.i), std::max(hi.j, k.j), std::max(hi.k, k.k)};
  }
  const int nx = hi.i - lo.i + 1, ny = hi.j - lo.j + 1, nz = hi.k - lo.k + 1;
  std::vector<double> dense(static_cast<std::size_t>(nx) * ny * nz * cin, 0.0);
  auto at = [&](int i, int j, int k) -> const double* {
    if (i < lo.i || i > hi.i || j < lo.j || j > hi.j || k < lo.k || k > hi.k) return nullptr;
    return dense.data() + ((static_cast<std::size_t>(i - lo.i) * ny + (j - lo.j)) * nz + (k - lo.k)) * cin;
  };
  const auto f = grid.features.data();
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const VoxelKey& key = grid.keys[r];
    double* cell = const_cast<double*>(at(key.i, key.j, key.k));
    std::copy_n(f.data() + r * cin, cin, cell);
  }
  std::vector<VoxelKey> outputs;
  for (const auto& k : grid.keys) {
    outputs.push_back(stride == 1 ? k : VoxelKey{static_cast<std::int32_t>(std::floor(k.i / 2.0)),
                                                 static_cast<std::int32_t>(std::floor(k.j / 2.0)),
                                                 static_cast<std::int32_t>(std::floor(k.k / 2.0))});
  }
  const auto w = kernel.data();
  const auto b = bias.data();
  std::map<VoxelKey, std::vector<double>> out;
  for (const auto& q : outputs) {
    if (out.count(q)) continue;
    std::vector<double> y(b.begin(), b.end());
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          const double* x = at(stride * q.i + di, stride * q.j + dj, stride * q.k + dk);
          if (!x) continue;
          const int tap = (di + 1) * 9 + (dj + 1) * 3 + (dk + 1);
          for (std::size_t a = 0; a < cin; ++a)
            for (std::size_t c = 0; c < cout; ++c) y[c] += x[a] * w[(tap * cin + a) * cout + c];
        }
    out.emplace(q, std::move(y));
  }
  return out;
}

std::vector<double> dense_depthwise(const std::vector<double>& chw, int c, int h, int w,
                                    const std::vector<double>& kernel_tc, int stride) {
  const int ho = (h + stride - 1) / stride, wo = (w + stride - 1) / stride;
  std::vector<double> out(static_cast<std::size_t>(c) * ho * wo, 0.0);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int sy = y * stride + dy;
            if (sy < 0 || sy >= h) continue;
            int sx = x * stride + dx;
            if (sx < 0) sx += w;
            if (sx >= w) sx -= w;
            acc += chw[(static_cast<std::size_t>(ch) * h + sy) * w + sx] *
                   kernel_tc[static_cast<std::size_t>((dy + 1) * 3 + (dx + 1)) * c + ch];
          }
        out[(static_cast<std::size_t>(ch) * ho + y) * wo + x] = acc;
      }
  return out;
}

MonteCarlo kl_monte_carlo(const std::vector<double>& mu_p, const std::vector<double>& sigma_p,
                          const std::vector<double>& mu_q, const std::vector<double>& sigma_q,
                          std::size_t samples, Rng& rng) {
  const std::size_t c = mu_p.size();
  // ln p(x) - ln q(x) = sum_i ln(sq/sp) - z^2/2 + (x - mq)^2 / (2 sq^2), x = mp + sp z.
  double constant = 0.0;
  std::vector<double> inv_q2(c);
  for (std::size_t i = 0; i < c; ++i) {
    constant += std::log(sigma_q[i] / sigma_p[i]);
    inv_q2[i] = 0.5 / (sigma_q[i] * sigma_q[i]);
  }
  double mean = 0.0, m2 = 0.0;
  double spare = 0.0;
  bool has_spare = false;
  auto normal = [&]() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  };
  for (std::size_t s = 0; s < samples; ++s) {
    double v = constant;
    for (std::size_t i = 0; i < c; ++i) {
      const double z = normal();
      const double d = mu_p[i] + sigma_p[i] * z - mu_q[i];
      v += d * d * inv_q2[i] - 0.5 * z * z;
    }
    // Welford update.
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

SparseVoxelGrid random_grid(Rng& rng, int extent, std::size_t channels, double occupancy, VoxelKey origin,
                            double voxel_size) {
  SparseVoxelGrid g;
  g.voxel_size = voxel_size;
  for (int i = 0; i < extent; ++i)
    for (int j = 0; j < extent; ++j)
      for (int k = 0; k < extent; ++k)
        if (rng.uniform() < occupancy) g.keys.push_back({origin.i + i, origin.j + j, origin.k + k});
  if (g.keys.empty()) g.keys.push_back(origin);
  g.reindex();
  const std::size_t v = g.keys.size();
  std::vector<double> f(v * channels);
  for (double& x : f) x = rng.uniform(-1.0, 1.0);
  g.features = Tensor::from({v, channels}, std::move(f));
  g.member_counts.assign(v, 1);
  g.point_to_voxel.resize(v);
  std::iota(g.point_to_voxel.begin(), g.point_to_voxel.end(), 0u);
  for (const auto& k : g.keys)
    g.rep_points.push_back({(k.i + 0.5) * voxel_size, (k.j + 0.5) * voxel_size, (k.k + 0.5) * voxel_size});
  return g;
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.num_classes = 4;
  c.voxel_size = 0.4;
  c.geo.channels = {4, 4, 8, 8};
  c.geo.strides = {1, 2, 1, 2};
  c.ref.stages = {{4, 2, 2}, {4, 2, 1}, {8, 2, 2}, {8, 2, 1}};
  c.projection = {8, 48, 3.0, -25.0};
  c.query_tokens = 4;
  c.heads = 2;
  c.decoder_hidden = 8;
  return c;
}

PointCloud tiny_scene(std::uint64_t seed) {
  SceneSpec s;
  s.num_classes = 4;
  s.seed = seed;
  s.sensor.beams = 8;
  s.sensor.azimuth_steps = 48;
  s.sensor.max_range = 30.0;
  ScenePrimitive ground;
  ground.kind = ShapeKind::kGround;
  ground.cz = s.ground_height;
  ground.label = 0;
  ground.reflectance = 0.3;
  ScenePrimitive box;
  box.kind = ShapeKind::kBox;
  box.label = 1;
  box.reflectance = 0.5;
  box.cx = 4.0;
  box.cy = 2.0;
  box.sx = box.sy = 1.5;
  box.sz = 1.6;
  box.cz = s.ground_height + 0.8;
  box.yaw = 0.3;
  ScenePrimitive cyl;
  cyl.kind = ShapeKind::kCylinder;
  cyl.label = 2;
  cyl.reflectance = 0.2;
  cyl.cx = -3.0;
  cyl.cy = -3.0;
  cyl.sx = 0.6;
  cyl.sz = 2.5;
  cyl.cz = s.ground_height;
  ScenePrimitive patch;
  patch.kind = ShapeKind::kPatch;
  patch.label = 3;
  patch.reflectance = 0.9;
  patch.cx = 3.0;
  patch.cy = -3.0;
  patch.sx = patch.sy = 3.0;
  patch.cz = s.ground_height;
  s.objects = {ground, box, cyl, patch};
  return generate_scene(s);
}

}  // namespace oracle

namespace {

constexpr double kGradTol = 1e-4;

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor random_param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = random_tensor(std::move(shape), rng, lo, hi);
  t.set_requires_grad(true);
  return t;
}

/// Values bounded away from the kinks at 0 and `other`.
Tensor away_from_kinks(Shape shape, Rng& rng, double lo, double hi, std::vector<double> kinks) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) {
    do {
      x = rng.uniform(lo, hi);
    } while (std::any_of(kinks.begin(), kinks.end(), [x](double k) { return std::abs(x - k) < 0.05; }));
  }
  return Tensor::parameter(std::move(shape), std::move(v));
}

/// sum(f() * W) for a fixed random W, so every output element matters.
ScalarFn weighted(std::function<Tensor()> f, std::uint64_t seed) {
  auto w = std::make_shared<Tensor>();
  return [f = std::move(f), w, seed] {
    Tensor y = f();
    if (!w->defined()) {
      Rng r(seed);
      *w = random_tensor(y.shape(), r);
    }
    return sum_all(mul(y, *w));
  };
}

CheckResult grad_check(const std::string& name, const ScalarFn& f, const std::vector<NamedTensor>& inputs,
                       std::size_t max_samples = 0) {
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.tolerance = kGradTol;
  opt.max_samples = max_samples;
  CheckResult r;
  r.name = name;
  r.tolerance = kGradTol;
  try {
    const GradCheckReport rep = gradient_check(f, inputs, opt);
    r.passed = rep.passed;
    r.max_error = rep.max_rel_error;
    r.samples = rep.entries.size();
    r.detail = std::to_string(rep.entries.size()) + " entries";
    const auto worst = std::max_element(rep.entries.begin(), rep.entries.end(),
                                        [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
    if (worst != rep.entries.end()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, ", worst %s[%zu] analytic %.6e numeric %.6e", worst->tensor.c_str(), worst->index,
                    worst->analytic, worst->numeric);
      r.detail += buf;
    }
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

CheckResult bound_check(const std::string& name, double error, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.name = name;
  r.max_error = error;
  r.tolerance = tolerance;
  r.passed = error <= tolerance;
  r.detail = std::move(detail);
  return r;
}

CheckResult flag_check(const std::string& name, bool ok, std::string detail = {}) {
  CheckResult r;
  r.name = name;
  r.passed = ok;
  r.detail = std::move(detail);
  return r;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void perturb_parameters(const std::vector<NamedTensor>& params, Rng& rng, double scale_factor) {
  for (const auto& p : params)
    for (double& v : Tensor(p.tensor).mutable_data()) v += scale_factor * rng.normal();
}

}  // namespace

SuiteReport verify_grad(std::uint64_t seed) {
  SuiteReport rep;
  rep.suite = "grad";
  Rng rng(seed);
  std::uint64_t wseed = seed * 1000;

  {
    Tensor a = random_param({3, 4}, rng), b = random_param({4, 2}, rng);
    rep.add(grad_check("matmul", [=] { return sum_all(matmul(a, b)); }, {{"a", a}, {"b", b}}));
  }
  {
    Tensor a = random_param({2, 3}, rng), b = random_param({2, 3}, rng, 0.5, 2.0), v = random_param({3}, rng, 0.5, 2.0);
    const std::vector<std::pair<const char*, ElementwiseOp>> binary{
        {"add", ElementwiseOp::kAdd}, {"sub", ElementwiseOp::kSub}, {"mul", ElementwiseOp::kMul}, {"div", ElementwiseOp::kDiv}};
    for (const auto& [name, op] : binary) {
      rep.add(grad_check(std::string("elementwise.") + name, weighted([=] { return elementwise(op, a, b); }, ++wseed),
                         {{"a", a}, {"b", b}}));
      rep.add(grad_check(std::string("elementwise.") + name + ".broadcast",
                         weighted([=] { return elementwise(op, a, v); }, ++wseed), {{"a", a}, {"v", v}}));
    }
    rep.add(grad_check("elementwise.exp", weighted([=] { return exp(a); }, ++wseed), {{"a", a}}));
    rep.add(grad_check("elementwise.log", weighted([=] { return log(b); }, ++wseed), {{"b", b}}));
    rep.add(grad_check("elementwise.neg", weighted([=] { return neg(a); }, ++wseed), {{"a", a}}));
  }
  {
    Tensor x = random_param({3, 5}, rng, -4.0, 4.0);
    rep.add(grad_check("softplus", weighted([=] { return softplus(x); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("sigmoid", weighted([=] { return sigmoid(x); }, ++wseed), {{"x", x}}));
    Tensor k = away_from_kinks({3, 5}, rng, -3.0, 8.0, {0.0, 6.0});
    rep.add(grad_check("relu", weighted([=] { return relu(k); }, ++wseed), {{"x", k}}));
    rep.add(grad_check("relu6", weighted([=] { return relu6(k); }, ++wseed), {{"x", k}}));
    rep.add(grad_check("clamp_max", weighted([=] { return clamp_max(k, 2.0); }, ++wseed), {{"x", k}}));
  }
  {
    Tensor x = random_param({4, 5}, rng, -2.0, 2.0);
    const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
    rep.add(grad_check("softmax", weighted([=] { return softmax_lastaxis(x); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("softmax.masked", weighted([=] { return softmax_lastaxis(x, mask); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("reduce.sum.axis0", weighted([=] { return reduce(ReduceOp::kSum, x, 0); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("reduce.mean.axis1", weighted([=] { return reduce(ReduceOp::kMean, x, 1); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("transpose", weighted([=] { return transpose(x); }, ++wseed), {{"x", x}}));
    rep.add(grad_check("reshape", weighted([=] { return reshape(x, {2, 10}); }, ++wseed), {{"x", x}}));
    const std::vector<std::uint32_t> idx{3, 0, 3, 1};
    rep.add(grad_check("gather_rows", weighted([=] { return gather_rows(x, idx); }, ++wseed), {{"x", x}}));
    Tensor vals = random_param({2, 5}, rng);
    const std::vector<std::uint32_t> rows{2, 0};
    rep.add(grad_check("overwrite_rows", weighted([=] { return overwrite_rows(x, rows, vals); }, ++wseed),
                       {{"x", x}, {"values", vals}}));
    Tensor y = random_param({4, 3}, rng);
    rep.add(grad_check("concat_cols", weighted([=] { return concat_cols(x, y); }, ++wseed), {{"x", x}, {"y", y}}));
    rep.add(grad_check("slice_cols", weighted([=] { return slice_cols(x, 1, 3); }, ++wseed), {{"x", x}}));
    Tensor s = random_param({4}, rng);
    rep.add(grad_check("scale_rows", weighted([=] { return scale_rows(x, s); }, ++wseed), {{"x", x}, {"s", s}}));
    const std::vector<int> labels{2, kIgnoreLabel, 0, 4};
    rep.add(grad_check("cross_entropy", [=] { return cross_entropy(x, labels); }, {{"logits", x}}));
  }
  {
    for (int stride : {1, 2}) {
      SparseVoxelGrid g = oracle::random_grid(rng, 5, 3, 0.35, {-2, -1, 0});
      Tensor feats = g.features;
      feats.set_requires_grad(true);
      Tensor kernel = random_param({kKernelTaps, 3, 4}, rng);
      Tensor bias = random_param({4}, rng);
      const std::string name = "sparse_conv3d.stride" + std::to_string(stride);
      rep.add(grad_check(name, weighted([=] { return sparse_conv3d(g, kernel, bias, stride).features; }, ++wseed),
                         {{"features", feats}, {"kernel", kernel}, {"bias", bias}}));
    }
    SparseConvBlock block(3, 4, 1, rng);
    Tensor(block.norm.running_mean).mutable_data()[0] = 0.3;
    Tensor(block.norm.running_var).mutable_data()[1] = 2.0;
    for (double& v : block.norm.gamma.mutable_data()) v = rng.uniform(0.5, 1.5);
    block.relu = false;
    SparseVoxelGrid g = oracle::random_grid(rng, 5, 3, 0.35);
    std::vector<NamedTensor> params, buffers;
    block.collect("block", params, buffers);
    rep.add(grad_check("sparse_block.norm", weighted([=] { return block.forward(g, false).features; }, ++wseed), params));

    SparseVoxelGrid pts = oracle::random_grid(rng, 4, 3, 0.5);
    pts.point_to_voxel = {0, 0, 1, 2, 1, 0};
    Tensor f = pts.features;
    f.set_requires_grad(true);
    rep.add(grad_check("devoxelize", weighted([=] { return devoxelize(pts, 6); }, ++wseed), {{"features", f}}));
  }
  {
    Tensor x = random_param({20, 3}, rng);
    Tensor gamma = random_param({3}, rng, 0.5, 1.5), beta = random_param({3}, rng);
    rep.add(grad_check("instance_norm2d", weighted([=] { return instance_norm2d(x, gamma, beta, 1e-5); }, ++wseed),
                       {{"x", x}, {"gamma", gamma}, {"beta", beta}}));
    for (int stride : {1, 2}) {
      FeatureMap fm{random_param({30, 3}, rng), 5, 6};
      Tensor k = random_param({9, 3}, rng);
      rep.add(grad_check("depthwise_conv3x3.stride" + std::to_string(stride),
                         weighted([=] { return depthwise_conv3x3(fm, k, stride).data; }, ++wseed),
                         {{"x", fm.data}, {"kernel", k}}));
    }
    InvertedResidualBlock block(3, {3, 2, 1}, rng);
    std::vector<NamedTensor> params;
    block.collect("ir", params);
    perturb_parameters(params, rng, 0.1);
    FeatureMap in{random_param({24, 3}, rng), 4, 6};
    params.push_back({"input", in.data});
    rep.add(grad_check("inverted_residual", weighted([=] { return block.forward(in).data; }, ++wseed), params));
  }
  {
    DistributionHead head(4, 3, rng);
    Tensor f = random_param({5, 4}, rng);
    std::vector<NamedTensor> params;
    head.collect("head", params);
    params.push_back({"f", f});
    rep.add(grad_check("distribution_head", [=] {
      const FeatureDistribution d = head.forward(f);
      return add(sum_all(d.mu), sum_all(d.sigma));
    }, params));

    FeatureDistribution p{random_param({4, 3}, rng), random_param({4, 3}, rng, 0.2, 2.0)};
    FeatureDistribution q{random_param({4, 3}, rng), random_param({4, 3}, rng, 0.2, 2.0)};
    const std::vector<NamedTensor> pq{{"mu_p", p.mu}, {"sigma_p", p.sigma}, {"mu_q", q.mu}, {"sigma_q", q.sigma}};
    rep.add(grad_check("kl_diag_gaussian", weighted([=] { return kl_diag_gaussian_rows(p, q); }, ++wseed), pq));

    PairedSites pairs;
    pairs.voxel_rows = {0, 2, 3};
    pairs.cells = {1, 0, 3};
    rep.add(grad_check("cic_loss", [=] { return cic_loss(pairs, p, q, 1e3); }, pq));
    DistributionHead head2(4, 3, rng);
    Tensor f2 = random_param({4, 4}, rng);
    head2.collect("head2", params);
    params.push_back({"f2", f2});
    rep.add(grad_check("cic_loss.heads", [=] { return cic_loss(pairs, head.forward(f), head2.forward(f2), 10.0); },
                       params));
    rep.add(grad_check("local_fuse", weighted([=] { return local_fuse(p, q).fused; }, ++wseed), pq));
    Tensor eps = random_tensor({4, 3}, rng);
    rep.add(grad_check("reparameterize", weighted([=] { return reparameterize(p, eps); }, ++wseed),
                       {{"mu", p.mu}, {"sigma", p.sigma}}));
  }
  {
    AttentionParams attn(8, 2, rng);
    std::vector<NamedTensor> params;
    attn.collect("attn", params);
    perturb_parameters(params, rng, 0.05);
    Tensor qs = random_param({3, 8}, rng), ctx = random_param({6, 8}, rng);
    const std::vector<std::uint8_t> mask{1, 1, 0, 1, 0, 1};
    auto all = params;
    all.push_back({"queries", qs});
    all.push_back({"context", ctx});
    rep.add(grad_check("cross_attention", weighted([=] { return cross_attention(qs, ctx, attn, mask); }, ++wseed), all));

    AttentionParams s2(8, 2, rng);
    Tensor tokens = random_param({2, 8}, rng);
    Tensor m_geo = random_param({5, 8}, rng);
    std::vector<NamedTensor> gp;
    attn.collect("stage1", gp);
    s2.collect("stage2", gp);
    gp.push_back({"tokens", tokens});
    gp.push_back({"m_geo", m_geo});
    gp.push_back({"m_ref", ctx});
    rep.add(grad_check("global_fuse", weighted([=] { return global_fuse(m_geo, ctx, tokens, attn, s2, mask); }, ++wseed), gp));

    MProjection proj(8);
    std::vector<NamedTensor> pp;
    proj.collect("m", pp);
    perturb_parameters(pp, rng, 0.3);
    pp.push_back({"f", m_geo});
    rep.add(grad_check("m_projection", weighted([=] { return proj.forward(m_geo); }, ++wseed), pp));
  }
  {
    const PointCloud scene = oracle::tiny_scene(seed);
    GrcModel model(oracle::tiny_model_config());
    const std::vector<NamedTensor> params = model.parameters();
    perturb_parameters(params, rng, 0.1);
    const double beta = 0.5;
    rep.add(grad_check("model.total_loss", [&model, &scene, beta, seed] {
      Rng noise(seed ^ 0xC1C);
      ForwardOptions opt;
      opt.noise = &noise;
      const ForwardResult fr = model.forward(scene, opt);
      return total_loss(fr.logits, scene.labels, fr.cic, beta);
    }, params, 200));
  }
  return rep;
}

SuiteReport verify_kl(std::uint64_t seed, std::size_t pairs, std::size_t samples) {
  SuiteReport rep;
  rep.suite = "kl";
  auto kl_value = [](std::vector<double> mp, std::vector<double> sp, std::vector<double> mq, std::vector<double> sq) {
    const std::size_t c = mp.size();
    FeatureDistribution p{Tensor::from({1, c}, std::move(mp)), Tensor::from({1, c}, std::move(sp))};
    FeatureDistribution q{Tensor::from({1, c}, std::move(mq)), Tensor::from({1, c}, std::move(sq))};
    return kl_diag_gaussian(p, q).item();
  };
  rep.add(bound_check("analytic.mean_shift", std::abs(kl_value({1.0}, {1.0}, {0.0}, {1.0}) - 0.5), 1e-12));
  rep.add(bound_check("analytic.scale", std::abs(kl_value({0.0}, {2.0}, {0.0}, {1.0}) - (std::log(0.5) + 1.5)), 1e-12));
  rep.add(bound_check("identical", std::abs(kl_value({0.3, -1.0}, {0.5, 2.0}, {0.3, -1.0}, {0.5, 2.0})), 0.0));

  Rng rng(seed);
  double worst = 0.0;
  std::size_t outside = 0;
  bool negative = false;
  for (std::size_t t = 0; t < pairs; ++t) {
    const std::size_t c = 1 + rng.below(8);
    std::vector<double> mp(c), sp(c), mq(c), sq(c);
    for (std::size_t i = 0; i < c; ++i) {
      mp[i] = rng.uniform(-2.0, 2.0);
      mq[i] = rng.uniform(-2.0, 2.0);
      sp[i] = rng.uniform(0.1, 3.0);
      sq[i] = rng.uniform(0.1, 3.0);
    }
    const double closed = kl_value(mp, sp, mq, sq);
    negative = negative || closed < 0.0;
    Rng mc_rng = rng.split(static_cast<std::uint64_t>(t));
    const auto mc = oracle::kl_monte_carlo(mp, sp, mq, sq, samples, mc_rng);
    const double z = std::abs(closed - mc.mean) / mc.standard_error;
    worst = std::max(worst, z);
    if (z > 3.0) ++outside;
  }
  rep.add(bound_check("monte_carlo.within_3se", worst, 3.0,
                      std::to_string(pairs) + " pairs, " + std::to_string(outside) + " outside 3 SE, worst " +
                          std::to_string(worst) + " SE"));
  rep.add(flag_check("nonnegative", !negative));
  return rep;
}

SuiteReport verify_projection(std::uint64_t seed, std::size_t points) {
  SuiteReport rep;
  rep.suite = "projection";
  const ProjectionConfig cfg;
  Rng rng(seed);
  PointCloud cloud;
  const double up = cfg.fov_up_deg * std::numbers::pi / 180.0, down = cfg.fov_down_deg * std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double pitch = rng.uniform(down, up);
    const double r = rng.uniform(1.0, 50.0);
    cloud.points.push_back({r * std::cos(pitch) * std::cos(yaw), r * std::cos(pitch) * std::sin(yaw),
                            r * std::sin(pitch), rng.uniform()});
  }
  const RangeImage img = spherical_project(cloud, cfg);
  std::size_t reproject_fail = 0, winners = 0, round_trip_fail = 0, loser_fail = 0;
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u) {
      const auto idx = img.unproject(u, v);
      if (!idx) continue;
      const auto px = project_point(cloud.points[*idx], cfg);
      if (!px || px->u != u || px->v != v) ++reproject_fail;
    }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto px = project_point(cloud.points[i], cfg);
    if (!px) {
      ++round_trip_fail;
      continue;
    }
    const auto idx = img.unproject(px->u, px->v);
    if (!idx) {
      ++round_trip_fail;
    } else if (*idx == i) {
      ++winners;
    } else if (cloud.points[*idx].range() > cloud.points[i].range()) {
      ++loser_fail;
    }
  }
  rep.add(flag_check("valid_pixels_reproject", reproject_fail == 0,
                     std::to_string(img.valid_count()) + " valid pixels, " + std::to_string(reproject_fail) + " mismatches"));
  rep.add(flag_check("survivors_round_trip", round_trip_fail == 0 && winners == img.valid_count(),
                     std::to_string(winners) + " survivors of " + std::to_string(points)));
  rep.add(flag_check("collisions_nearer_wins", loser_fail == 0, std::to_string(loser_fail) + " violations"));
  return rep;
}

SuiteReport verify_fusion(std::uint64_t seed) {
  SuiteReport rep;
  rep.suite = "fusion";
  // Confidence weight on a 50 x 50 grid of mean sigmas.
  std::vector<double> grid(50);
  for (int i = 0; i < 50; ++i) grid[i] = 0.05 * std::pow(100.0, i / 49.0);
  bool in_range = true, equal_half = true, decreasing = true, increasing = true;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const double a = fusion_alpha(grid[i], grid[j]);
      in_range = in_range && a > 0.0 && a < 1.0;
      if (i == j) equal_half = equal_half && a == 0.5;
      if (i + 1 < 50) decreasing = decreasing && fusion_alpha(grid[i + 1], grid[j]) < a;
      if (j + 1 < 50) increasing = increasing && fusion_alpha(grid[i], grid[j + 1]) > a;
    }
  rep.add(flag_check("alpha.open_unit_interval", in_range));
  rep.add(flag_check("alpha.half_at_equal", equal_half));
  rep.add(flag_check("alpha.decreasing_in_geo", decreasing));
  rep.add(flag_check("alpha.increasing_in_ref", increasing));
  rep.add(bound_check("alpha.worked_value", std::abs(fusion_alpha(0.5, 1.0) - 0.731059), 1e-6));
  {
    FeatureDistribution g{Tensor::from({1, 2}, {1.0, 2.0}), Tensor::from({1, 2}, {0.25, 0.75})};
    FeatureDistribution r{Tensor::from({1, 2}, {3.0, -1.0}), Tensor::from({1, 2}, {1.0, 1.0})};
    const LocalFusion lf = local_fuse(g, r);
    const double a = 1.0 / (1.0 + std::exp(-1.0));
    rep.add(bound_check("alpha.tensor_path", std::abs(lf.alpha[0] - a), 1e-12));
    rep.add(bound_check("local_fuse.convex", std::abs(lf.fused[0] - (a * 1.0 + (1 - a) * 3.0)), 1e-12));
  }

  Rng rng(seed);
  const std::size_t c = 16;
  AttentionParams s1(c, 4, rng), s2(c, 4, rng);
  const Tensor queries = random_tensor({8, c}, rng);
  const Tensor m_ref = random_tensor({64, c}, rng);
  const Tensor m_geo = random_tensor({20, c}, rng);
  std::vector<std::uint8_t> mask(64, 1);
  for (std::size_t i = 0; i < 64; i += 5) mask[i] = 0;

  std::vector<Tensor> weights;
  cross_attention(queries, m_ref, s1, mask, &weights);
  double row_err = 0.0, masked_weight = 0.0;
  for (const Tensor& w : weights) {
    const std::size_t a = w.dim(0), b = w.dim(1);
    for (std::size_t i = 0; i < a; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        s += w[i * b + j];
        if (!mask[j]) masked_weight = std::max(masked_weight, std::abs(w[i * b + j]));
      }
      row_err = std::max(row_err, std::abs(s - 1.0));
    }
  }
  rep.add(bound_check("attention.row_stochastic", row_err, 1e-12));
  rep.add(bound_check("attention.masked_zero", masked_weight, 0.0));

  const Tensor fused = global_fuse(m_geo, m_ref, queries, s1, s2, mask);
  const Tensor nested = cross_attention(m_geo, cross_attention(queries, m_ref, s1, mask), s2);
  rep.add(bound_check("global_fuse.composition", max_abs_diff(fused.data(), nested.data()), 1e-12));

  std::vector<std::uint32_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = 63; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<std::uint8_t> perm_mask(64);
  for (std::size_t i = 0; i < 64; ++i) perm_mask[i] = mask[perm[i]];
  const Tensor permuted = global_fuse(m_geo, gather_rows(m_ref, perm), queries, s1, s2, perm_mask);
  rep.add(bound_check("global_fuse.cell_permutation", max_abs_diff(fused.data(), permuted.data()), 1e-12));

  std::vector<std::uint32_t> vperm(20);
  std::iota(vperm.begin(), vperm.end(), 0u);
  std::reverse(vperm.begin(), vperm.end());
  const Tensor vox = global_fuse(gather_rows(m_geo, vperm), m_ref, queries, s1, s2, mask);
  rep.add(bound_check("global_fuse.voxel_equivariance",
                      max_abs_diff(vox.data(), gather_rows(fused, vperm).data()), 1e-12));

  // Complementarity loss identities.
  FeatureDistribution g{random_tensor({6, 5}, rng), random_tensor({6, 5}, rng, 0.2, 2.0)};
  FeatureDistribution r{random_tensor({6, 5}, rng), random_tensor({6, 5}, rng, 0.2, 2.0)};
  PairedSites pairs;
  pairs.voxel_rows = {0, 1, 2, 3, 4, 5};
  pairs.cells = {0, 1, 2, 3, 4, 5};
  const double loss = cic_loss(pairs, g, r, kNoClip).item();
  double hand = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::vector<std::uint32_t> one{static_cast<std::uint32_t>(i)};
    const FeatureDistribution gi = g.select(one), ri = r.select(one), prior = standard_prior(1, 5);
    hand += kl_diag_gaussian(gi, prior).item() + kl_diag_gaussian(ri, prior).item() - kl_diag_gaussian(gi, ri).item() -
            kl_diag_gaussian(ri, gi).item();
  }
  hand /= 6.0;
  rep.add(bound_check("cic.composition", std::abs(loss - hand), 1e-12));
  const FeatureDistribution std_normal = standard_prior(6, 5);
  rep.add(bound_check("cic.standard_normal_zero", std::abs(cic_loss(pairs, std_normal, std_normal, kNoClip).item()), 0.0));
  return rep;
}

SuiteReport verify_sparse_conv(std::uint64_t seed, std::size_t trials) {
  SuiteReport rep;
  rep.suite = "sparse_conv";
  Rng rng(seed);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const int extent = 2 + static_cast<int>(rng.below(7));  // up to 8^3
    const std::size_t cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const VoxelKey origin{static_cast<int>(rng.below(9)) - 4, static_cast<int>(rng.below(9)) - 4,
                          static_cast<int>(rng.below(9)) - 4};
    SparseVoxelGrid g = oracle::random_grid(rng, extent, cin, rng.uniform(0.1, 0.6), origin);
    const Tensor kernel = random_tensor({kKernelTaps, cin, cout}, rng);
    const Tensor bias = random_tensor({cout}, rng);
    for (int stride : {1, 2}) {
      const SparseVoxelGrid out = sparse_conv3d(g, kernel, bias, stride);
      const auto dense = oracle::dense_conv3d(g, kernel, bias, stride);
      if (dense.size() != out.size()) {
        worst = std::numeric_limits<double>::infinity();
        continue;
      }
      for (std::size_t r = 0; r < out.size(); ++r) {
        const auto it = dense.find(out.keys[r]);
        if (it == dense.end()) {
          worst = std::numeric_limits<double>::infinity();
          continue;
        }
        for (std::size_t c = 0; c < cout; ++c) worst = std::max(worst, std::abs(out.features[r * cout + c] - it->second[c]));
        ++compared;
      }
    }
  }
  rep.add(bound_check("dense_oracle", worst, 1e-10,
                      std::to_string(trials) + " grids, " + std::to_string(compared) + " output voxels"));
  return rep;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"grad", "kl", "projection", "fusion", "sparse_conv"};
  return names;
}

std::vector<SuiteReport> run_suite(const std::string& name, std::optional<std::uint64_t> seed) {
  std::vector<SuiteReport> out;
  auto want = [&name](const char* s) { return name == "all" || name == s; };
  bool known = name == "all";
  for (const auto& n : suite_names()) known = known || n == name;
  if (!known) throw ConfigError("unknown verification suite '" + name + "'");
  if (want("grad")) out.push_back(verify_grad(seed.value_or(7)));
  if (want("kl")) out.push_back(verify_kl(seed.value_or(11)));
  if (want("projection")) out.push_back(verify_projection(seed.value_or(13)));
  if (want("fusion")) out.push_back(verify_fusion(seed.value_or(17)));
  if (want("sparse_conv")) out.push_back(verify_sparse_conv(seed.value_or(19)));
  return out;
}

}  // namespace grc
