// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "grc/checkpoint.hpp"
#include "grc/errors.hpp"
#include "grc/metrics.hpp"
#include "grc/model.hpp"
#include "grc/ops.hpp"
#include "grc/training.hpp"
#include "grc/verify.hpp"
#include "helpers.hpp"

using namespace grc;

namespace {

ModelConfig tiny(const std::string& ablation) {
  ModelConfig cfg = oracle::tiny_model_config();
  apply_ablation(cfg, ablation);
  return cfg;
}

// The classifier starts at zero; give it weights so logits depend on features.
GrcModel with_classifier(const std::string& ablation, std::uint64_t seed) {
  GrcModel m(tiny(ablation));
  Rng rng(seed);
  m.decoder2.weight = grc::test::random_tensor(m.decoder2.weight.shape(), rng);
  return m;
}

TrainConfig short_run(std::size_t steps) {
  TrainConfig t;
  t.steps = steps;
  t.max_lr = 0.02;
  t.seed = 3;
  return t;
}

std::vector<double> flat_params(const GrcModel& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
  for (const auto& b : m.buffers()) out.insert(out.end(), b.tensor.data().begin(), b.tensor.data().end());
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("grc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("total loss") {
    const Tensor uniform = Tensor::zeros({5, 4});
    const std::vector<int> labels{0, 1, 2, 3, kIgnoreLabel};
    CHECK(std::abs(total_loss(uniform, labels, Tensor::scalar(0.0), 0.0).item() - 1.386294) < 1e-6);
    Rng rng(1);
    const Tensor logits = grc::test::random_tensor({5, 4}, rng, -2, 2);
    const double ce = cross_entropy(logits, labels).item();
    CHECK(total_loss(logits, labels, Tensor::scalar(2.0), 0.0).item() == ce);
    CHECK(std::abs(total_loss(logits, labels, Tensor::scalar(2.0), 0.01).item() - (ce + 0.02)) < 1e-15);
    const std::vector<int> none(5, kIgnoreLabel);
    CHECK_THROWS_AS(total_loss(logits, none, Tensor::scalar(0.0), 0.0), DataError);
  }

  TEST_CASE("sgd momentum steps") {
    Tensor p = Tensor::parameter({1}, {0.0});
    SgdMomentum plain({{"p", p}}, 0.0, 0.0);
    p.grad_buffer()[0] = 1.0;
    plain.step(0.1);
    CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-15));

    Tensor q = Tensor::parameter({1}, {0.0});
    SgdMomentum heavy({{"q", q}}, 0.9, 0.0);
    q.grad_buffer()[0] = 1.0;
    heavy.step(0.1);
    CHECK(heavy.velocity()[0][0] == 1.0);
    CHECK(q[0] == doctest::Approx(-0.1).epsilon(1e-15));
    heavy.step(0.1);
    CHECK(heavy.velocity()[0][0] == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(q[0] == doctest::Approx(-0.29).epsilon(1e-15));
  }

  TEST_CASE("weight decay alone shrinks the parameter") {
    Tensor p = Tensor::parameter({1}, {2.0});
    const double lr = 0.1, wd = 0.01, mom = 0.9;
    SgdMomentum opt({{"p", p}}, mom, wd);
    // The update is linear in (v, p): v' = mom v + wd p, p' = p - lr v'.
    double v = 0.0, x = 2.0;
    for (int k = 0; k < 50; ++k) {
      opt.zero_grad();
      opt.step(lr);
      v = mom * v + wd * x;
      x = x - lr * v;
    }
    CHECK(p[0] == doctest::Approx(x).epsilon(1e-14));
    CHECK(p[0] < 2.0);
    CHECK(p[0] > 0.0);
  }

  TEST_CASE("non-finite gradient names the parameter") {
    Tensor p = Tensor::parameter({2}, {1.0, 1.0});
    SgdMomentum opt({{"layer.weight", p}});
    p.grad_buffer()[1] = std::numeric_limits<double>::quiet_NaN();
    try {
      opt.step(0.1);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
    }
    CHECK(p[0] == 1.0);
  }

  TEST_CASE("one-cycle schedule endpoints") {
    const std::size_t total = 1000;
    CHECK(onecycle_lr(0, total, 0.24) == doctest::Approx(0.24 / 25).epsilon(1e-14));
    CHECK(onecycle_lr(300, total, 0.24) == doctest::Approx(0.24).epsilon(1e-14));
    CHECK(std::abs(onecycle_lr(total - 1, total, 0.24) - 0.24 / 1e4) <= 0.01 * 0.24 / 1e4);
    CHECK_THROWS(onecycle_lr(total, total, 0.24));
  }

  TEST_CASE("miou hand example and ignore semantics") {
    const std::vector<int> truth{0, 0, 0, 1, 1}, pred{0, 0, 1, 1, 0};
    const IouReport r = miou(pred, truth, 2);
    CHECK(r.per_class[0] == doctest::Approx(0.5));
    CHECK(r.per_class[1] == doctest::Approx(1.0 / 3.0));
    CHECK(r.miou == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
    CHECK(miou(truth, truth, 2).miou == 1.0);

    std::vector<int> t2 = truth, p2 = pred;
    t2.insert(t2.end(), {kIgnoreLabel, kNoiseLabel, kIgnoreLabel});
    p2.insert(p2.end(), {1, 0, 0});
    CHECK(miou(p2, t2, 2).miou == r.miou);
    const std::vector<int> ignored(3, kIgnoreLabel);
    CHECK_THROWS_AS(miou(std::vector<int>{0, 1, 0}, ignored, 2), DataError);
  }

  TEST_CASE("miou is invariant to a consistent relabeling") {
    Rng rng(2);
    std::vector<int> truth(400), pred(400);
    for (int i = 0; i < 400; ++i) {
      truth[i] = static_cast<int>(rng.below(5));
      pred[i] = rng.uniform() < 0.6 ? truth[i] : static_cast<int>(rng.below(5));
    }
    const std::vector<int> perm{3, 0, 4, 1, 2};
    std::vector<int> t2(400), p2(400);
    for (int i = 0; i < 400; ++i) t2[i] = perm[truth[i]], p2[i] = perm[pred[i]];
    CHECK(std::abs(miou(pred, truth, 5).miou - miou(p2, t2, 5).miou) < 1e-15);
  }

  TEST_CASE("classes absent from truth and prediction are not scored") {
    const IouReport r = miou(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 4);
    CHECK(r.classes_scored == 2);
    CHECK(std::isnan(r.per_class[3]));
    CHECK(r.miou == 1.0);
  }

  TEST_CASE("forward shape for every ablation") {
    const PointCloud scene = oracle::tiny_scene(4);
    for (const std::string& name : ablation_names()) {
      const GrcModel model(tiny(name));
      const ForwardResult out = model.forward(scene, Mode::kEval);
      CHECK(out.logits.dim(0) == scene.size());
      CHECK(out.logits.dim(1) == 4);
      CHECK(ablation_of(model.config()) == (name == "+gf" ? "full" : name));
    }
  }

  TEST_CASE("invalid flag chains are rejected") {
    ModelConfig cfg = tiny("gb");
    cfg.use_cic = true;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny("full");
    cfg.use_cic = false;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(apply_ablation(cfg, "everything"), ConfigError);
  }

  TEST_CASE("geometry-only logits ignore reflectance") {
    PointCloud scene = oracle::tiny_scene(5);
    const GrcModel gb = with_classifier("gb", 1), full = with_classifier("full", 1);
    const Tensor a = gb.forward(scene, Mode::kEval).logits;
    const Tensor c = full.forward(scene, Mode::kEval).logits;
    Rng rng(6);
    for (Point& p : scene.points) p.r = rng.uniform(0.0, 5.0);
    const Tensor b = gb.forward(scene, Mode::kEval).logits;
    CHECK(grc::test::max_abs_diff(a.data(), b.data()) == 0.0);
    CHECK(grc::test::max_abs_diff(c.data(), full.forward(scene, Mode::kEval).logits.data()) > 0.0);
  }

  TEST_CASE("eval mode is deterministic") {
    const PointCloud scene = oracle::tiny_scene(7);
    const GrcModel model = with_classifier("full", 2);
    const Tensor a = model.forward(scene, Mode::kEval).logits;
    const Tensor b = model.forward(scene, Mode::kEval).logits;
    CHECK(grc::test::max_abs_diff(a.data(), b.data()) == 0.0);
  }

  TEST_CASE("out-of-view scan degrades to the geometric path") {
    PointCloud high;
    for (int i = 0; i < 50; ++i) high.points.push_back({1.0 + 0.05 * i, 0.1 * (i % 5), 30.0, 0.5});
    const GrcModel model(tiny("full"));
    const ForwardResult out = model.forward(high, Mode::kEval);
    CHECK(out.diag.degraded);
    CHECK(out.logits.dim(0) == 50);
  }

  TEST_CASE("every ablation trains") {
    const std::vector<PointCloud> scenes{oracle::tiny_scene(8), oracle::tiny_scene(9)};
    for (const std::string& name : ablation_names()) {
      GrcModel model(tiny(name));
      Trainer trainer(model, scenes, short_run(4));
      const auto log = trainer.run();
      REQUIRE(log.size() == 4);
      for (const LogRow& row : log) CHECK(std::isfinite(row.loss));
      CHECK(trainer.state().step == 4);
    }
  }

  TEST_CASE("same seed gives the same loss curve") {
    const std::vector<PointCloud> scenes{oracle::tiny_scene(10), oracle::tiny_scene(11)};
    GrcModel a(tiny("full")), b(tiny("full"));
    Trainer ta(a, scenes, short_run(6)), tb(b, scenes, short_run(6));
    const auto la = ta.run(), lb = tb.run();
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].loss == lb[i].loss);
    CHECK(flat_params(a) == flat_params(b));
  }

  TEST_CASE("resume from a checkpoint continues exactly") {
    const std::vector<PointCloud> scenes{oracle::tiny_scene(12), oracle::tiny_scene(13), oracle::tiny_scene(14)};
    const auto dir = scratch_dir("resume");
    GrcModel straight(tiny("full"));
    Trainer ts(straight, scenes, short_run(8));
    const auto full_log = ts.run();

    GrcModel first(tiny("full"));
    Trainer t1(first, scenes, short_run(8));
    for (int i = 0; i < 3; ++i) t1.step();
    t1.save_checkpoint(dir / "mid.grcw");

    GrcModel second = load_model(dir / "mid.grcw");
    Trainer t2(second, scenes, short_run(8));
    t2.load_checkpoint(dir / "mid.grcw");
    CHECK(t2.state().step == 3);
    std::vector<LogRow> tail;
    while (t2.state().step < 8) tail.push_back(t2.step());
    for (std::size_t i = 0; i < tail.size(); ++i) CHECK(tail[i].loss == full_log[3 + i].loss);
    CHECK(flat_params(second) == flat_params(straight));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("weight file round trip") {
    Rng rng(15);
    std::vector<NamedArray> arrays{{"a.weight", {2, 3}, {}}, {"buffer/b", {1}, {std::nan("")}}, {"scalar", {}, {4.5}}};
    for (int i = 0; i < 6; ++i) arrays[0].values.push_back(rng.normal());
    const auto back = decode_grcw(encode_grcw(arrays));
    REQUIRE(back.size() == 3);
    CHECK(back[0].name == "a.weight");
    CHECK(back[0].shape == Shape{2, 3});
    CHECK(back[0].values == arrays[0].values);
    CHECK(std::isnan(back[1].values[0]));
    CHECK(back[2].values == std::vector<double>{4.5});
    Bytes bad = encode_grcw(arrays);
    bad.resize(bad.size() - 3);
    CHECK_THROWS_AS(decode_grcw(bad), ParseError);
  }

  TEST_CASE("augmentation keeps labels aligned") {
    const PointCloud scene = oracle::tiny_scene(16);
    Rng rng(17);
    const PointCloud aug = augment(scene, AugmentConfig{}, rng);
    CHECK(aug.size() <= scene.size());
    CHECK(aug.size() >= static_cast<std::size_t>(0.85 * scene.size()));
    CHECK(aug.labels.size() == aug.size());
    AugmentConfig off;
    off.enabled = false;
    CHECK(augment(scene, off, rng).size() == scene.size());
  }
}
