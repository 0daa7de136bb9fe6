// Copyright 2026 The S5 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gradcheck.hpp"
#include "s5/synth/scene.hpp"
#include "s5/train/s4.hpp"
#include "s5/util/error.hpp"

namespace s5 {
namespace {

Tensor probs_row(std::initializer_list<double> v) {
  Tensor t({1, v.size()});
  std::size_t k = 0;
  for (double x : v) t[k++] = x;
  return t;
}

TEST(PseudoLabel, ArgmaxAndConfidence) {
  const auto a = pseudo_label(probs_row({0.7, 0.2, 0.1}));
  EXPECT_EQ(a.labels[0], 0);
  EXPECT_EQ(a.confidence[0], 0.7);
  const auto b = pseudo_label(probs_row({0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(b.labels[0], 0);
  EXPECT_EQ(b.confidence[0], 0.25);
}

TEST(PseudoLabel, MatchesPixelScan) {
  RngStream rng(1, 1);
  Tensor p({50, 5});
  for (std::size_t i = 0; i < 50; ++i) {
    double z = 0;
    for (std::size_t k = 0; k < 5; ++k) z += (p.at(i, k) = std::floor(rng.uniform() * 4));
    for (std::size_t k = 0; k < 5; ++k) p.at(i, k) = z > 0 ? p.at(i, k) / z : 0.2;
  }
  const auto r = pseudo_label(p);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < 5; ++k)
      if (p.at(i, k) > p.at(i, best)) best = k;
    EXPECT_EQ(r.labels[i], best);
    EXPECT_EQ(r.confidence[i], p.at(i, best));
  }
}

double oracle_ce(const Tensor& logits, std::size_t row, std::size_t label) {
  const std::size_t K = logits.dim(1);
  double mx = -1e300;
  for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, logits.at(row, k));
  double z = 0;
  for (std::size_t k = 0; k < K; ++k) z += std::exp(logits.at(row, k) - mx);
  return std::log(z) + mx - logits.at(row, label);
}

TEST(SupervisedLoss, UniformSaturatedAndOracle) {
  LabelMap m(2, 2);
  m.labels = {0, 1, 2, 3};
  EXPECT_NEAR(supervised_loss({Tensor({4, 4}, 0.0)}, {m}), std::log(4.0), 1e-15);
  Tensor sat({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) sat.at(i, m.labels[i]) = 20.0;
  EXPECT_LT(supervised_loss({sat}, {m}), 1e-8);

  RngStream rng(2, 2);
  std::vector<Tensor> logits;
  std::vector<LabelMap> labels;
  for (int b = 0; b < 3; ++b) {
    Tensor l({6, 5});
    for (double& v : l.values()) v = rng.normal() * 3;
    LabelMap lm(2, 3);
    for (auto& v : lm.labels) v = static_cast<std::uint16_t>(rng.below(5));
    lm.labels[1] = kIgnoreLabel;
    logits.push_back(l);
    labels.push_back(lm);
  }
  double want = 0;
  for (int b = 0; b < 3; ++b) {
    double s = 0;
    int n = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      if (labels[b].labels[i] == kIgnoreLabel) continue;
      s += oracle_ce(logits[b], i, labels[b].labels[i]);
      ++n;
    }
    want += s / n / 3;
  }
  EXPECT_NEAR(supervised_loss(logits, labels), want, 1e-12);
}

PseudoLabels targets(std::vector<std::uint16_t> l, std::vector<double> c) { return {l, c}; }

TEST(UnsupervisedLoss, UnreachableThresholdGivesExactZero) {
  const auto r = unsupervised_loss({Tensor({3, 4}, 0.3)}, {targets({0, 1, 2}, {0.9, 0.5, 0.9})}, 0.95);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.mask_fraction, 0.0);
}

TEST(UnsupervisedLoss, ZeroThresholdIsPlainCrossEntropy) {
  RngStream rng(3, 3);
  Tensor l({5, 3});
  for (double& v : l.values()) v = rng.normal();
  const auto t = targets({0, 2, 1, 1, 0}, {0.4, 0.5, 0.9, 0.35, 0.6});
  double want = 0;
  for (std::size_t i = 0; i < 5; ++i) want += oracle_ce(l, i, t.labels[i]) / 5;
  const auto r = unsupervised_loss({l}, {t}, 1e-12);
  EXPECT_NEAR(r.value, want, 1e-12);
  EXPECT_EQ(r.mask_fraction, 1.0);
}

TEST(UnsupervisedLoss, HalfMaskedUniform) {
  const auto r = unsupervised_loss({Tensor({4, 4}, 0.0)}, {targets({0, 1, 2, 3}, {0.99, 0.1, 0.97, 0.2})}, 0.95);
  EXPECT_NEAR(r.value, 0.5 * std::log(4.0), 1e-15);
  EXPECT_EQ(r.mask_fraction, 0.5);
}

TEST(UnsupervisedLoss, MaskShrinksAsThresholdRises) {
  RngStream rng(4, 4);
  std::vector<double> conf(500);
  for (double& c : conf) c = rng.uniform();
  std::size_t prev = conf.size() + 1;
  for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
    const auto m = confidence_mask(conf, tau);
    std::size_t n = 0;
    for (auto v : m) n += v;
    EXPECT_LE(n, prev);
    prev = n;
  }
  // A zero confidence (padding) never enters the mask.
  EXPECT_EQ(confidence_mask(std::vector<double>{0.0}, 1e-300)[0], 0);
}

ModelConfig tiny() {
  ModelConfig c;
  c.image_size = 16;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.ffn_hidden = 16;
  c.depth = 2;
  c.heads = 2;
  c.num_classes = 4;
  return c;
}

std::vector<Sample> scenes(std::size_t n, const std::string& prefix, bool masks, std::uint64_t seed) {
  SceneSpec spec;
  spec.image_size = 16;
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    Scene s = gen_scene(spec, rng);
    Sample smp{prefix + std::to_string(i), "synthetic", std::move(s.image), std::nullopt};
    if (masks) smp.mask = std::move(s.mask);
    out.push_back(std::move(smp));
  }
  return out;
}

bool same_params(const SegNet& a, const SegNet& b) {
  std::vector<const Tensor*> pa, pb;
  a.for_each_param([&](const std::string&, const Tensor& t) { pa.push_back(&t); });
  b.for_each_param([&](const std::string&, const Tensor& t) { pb.push_back(&t); });
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!pa[i]->identical(*pb[i])) return false;
  return pa.size() == pb.size();
}

TrainConfig short_run() {
  TrainConfig c;
  c.steps = 4;
  c.batch_labeled = 3;
  c.batch_unlabeled = 3;
  c.eval_every = 0;
  c.lr = 3e-3;
  return c;
}

TEST(Pretrain, LambdaZeroMatchesSupervisedBitForBit) {
  const auto lab = scenes(5, "lab-", true, 1), unl = scenes(7, "unl-", false, 2);
  TrainConfig sup = short_run();
  sup.supervised_only = true;
  TrainConfig semi = short_run();
  semi.lambda = 0.0;
  semi.tau = 0.25;  // every pixel has max prob >= 1/K: all masked in, only lambda keeps them out
  const auto a = pretrain(SegNet(tiny(), 9), lab, unl, nullptr, sup, 5, 1);
  const auto b = pretrain(SegNet(tiny(), 9), lab, unl, nullptr, semi, 5, 1);
  EXPECT_TRUE(same_params(a.net, b.net));
  double frac = 0;
  for (const auto& l : b.log) frac += l.mask_frac;
  EXPECT_GT(frac, 0.0);
  semi.lambda = 1.0;
  const auto c = pretrain(SegNet(tiny(), 9), lab, unl, nullptr, semi, 5, 1);
  EXPECT_FALSE(same_params(a.net, c.net));
}

TEST(Pretrain, AllMaskedMatchesSupervisedBitForBit) {
  const auto lab = scenes(5, "lab-", true, 3), unl = scenes(6, "unl-", false, 4);
  TrainConfig sup = short_run();
  sup.supervised_only = true;
  TrainConfig semi = short_run();
  semi.tau = 1.0;  // softmax of a fresh network never reaches exactly 1
  const auto a = pretrain(SegNet(tiny(), 2), lab, unl, nullptr, sup, 8, 1);
  const auto b = pretrain(SegNet(tiny(), 2), lab, unl, nullptr, semi, 8, 1);
  for (const auto& l : b.log) EXPECT_EQ(l.mask_frac, 0.0);
  EXPECT_TRUE(same_params(a.net, b.net));
}

TEST(Pretrain, ZeroStepsReturnsInitialisation) {
  const auto lab = scenes(2, "lab-", true, 5);
  TrainConfig c = short_run();
  c.steps = 0;
  c.supervised_only = true;
  const auto r = pretrain(SegNet(tiny(), 4), lab, {}, &lab, c, 1, 1);
  EXPECT_TRUE(same_params(r.net, SegNet(tiny(), 4)));
  EXPECT_TRUE(r.log.empty());
  EXPECT_TRUE(r.final_miou.has_value());
}

TEST(Pretrain, WorkerCountDoesNotChangeTheResult) {
  const auto lab = scenes(4, "lab-", true, 6), unl = scenes(5, "unl-", false, 7);
  TrainConfig c = short_run();
  c.tau = 0.25;
  const auto a = pretrain(SegNet(tiny(), 1), lab, unl, nullptr, c, 3, 1);
  const auto b = pretrain(SegNet(tiny(), 1), lab, unl, nullptr, c, 3, 3);
  EXPECT_TRUE(same_params(a.net, b.net));
}

TEST(Pretrain, EmptyInputsAreConfigErrors) {
  const auto lab = scenes(2, "lab-", true, 5);
  TrainConfig c = short_run();
  EXPECT_THROW(pretrain(SegNet(tiny(), 1), {}, lab, nullptr, c, 1, 1), ConfigError);
  EXPECT_THROW(pretrain(SegNet(tiny(), 1), lab, {}, nullptr, c, 1, 1), ConfigError);
}

TEST(Pretrain, LogCarriesEvaluations) {
  const auto lab = scenes(3, "lab-", true, 8);
  TrainConfig c = short_run();
  c.supervised_only = true;
  c.steps = 5;
  c.eval_every = 2;
  const auto r = pretrain(SegNet(tiny(), 1), lab, {}, &lab, c, 1, 1);
  ASSERT_EQ(r.log.size(), 5u);
  EXPECT_TRUE(r.log[1].miou_eval && r.log[3].miou_eval && r.log[4].miou_eval);
  EXPECT_FALSE(r.log[0].miou_eval || r.log[2].miou_eval);
  EXPECT_EQ(r.final_miou, r.log[4].miou_eval);
  const auto j = r.log[1].to_json();
  for (const char* k : {"step", "L_s", "L_u", "mask_frac", "lr", "miou_eval"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(StepLoss, TotalGradientMatchesFiniteDifferences) {
  const auto lab = scenes(2, "lab-", true, 9), unl = scenes(3, "unl-", false, 10);
  ModelConfig mc = tiny();
  mc.image_size = 8;
  mc.patch_size = 2;
  SegNet net(mc, 3);
  // Crop the scenes down to 8x8.
  auto crop = [](const Sample& s) {
    Sample c{s.id, s.dataset, Tensor({8, 8, 3}), std::nullopt};
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        for (std::size_t k = 0; k < 3; ++k) c.image.at(i, j, k) = s.image.at(i + 4, j + 4, k);
    if (s.mask) {
      c.mask = LabelMap(8, 8);
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) c.mask->at(i, j) = s.mask->at(i + 4, j + 4);
    }
    return c;
  };
  std::vector<Sample> l8, u8;
  for (const auto& s : lab) l8.push_back(crop(s));
  for (const auto& s : unl) u8.push_back(crop(s));
  StepBatch batch;
  for (const auto& s : l8) batch.labeled.push_back(&s);
  for (const auto& s : u8) batch.unlabeled.push_back(&s);
  TrainConfig c;
  c.tau = 0.26;
  c.lambda = 0.7;
  const PreparedStep prep = prepare_step(net, batch, c, 4, 0, 1);
  net.zero_grad();
  const LossTerms t = step_loss(net, prep, c, true);
  EXPECT_GT(t.mask_frac, 0.0);
  EXPECT_LT(t.mask_frac, 1.0);
  std::vector<Tensor*> params;
  net.for_each_param([&](const std::string&, Tensor& p) { params.push_back(&p); });
  const auto r = testing::check_gradients(params, [&] { return step_loss(net, prep, c, false).total; });
  EXPECT_LT(r.max_rel, 1e-5);
}

TEST(Batches, EpochsCoverEveryItemOnce) {
  std::multiset<std::size_t> seen;
  for (std::size_t step = 0; step < 5; ++step)
    for (std::size_t i : batch_indices(10, 4, step, 3, "labeled")) seen.insert(i);
  // Steps 0..4 cover two full epochs.
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 2u);
  EXPECT_EQ(batch_indices(10, 4, 2, 3, "labeled"), batch_indices(10, 4, 2, 3, "labeled"));
  EXPECT_NE(batch_indices(10, 4, 0, 3, "labeled"), batch_indices(10, 4, 0, 3, "unlabeled"));
}

TEST(Schedule, CosineWithWarmup) {
  EXPECT_DOUBLE_EQ(cosine_lr(1.0, 0, 10, 2), 0.5);
  EXPECT_DOUBLE_EQ(cosine_lr(1.0, 1, 10, 2), 1.0);
  EXPECT_DOUBLE_EQ(cosine_lr(1.0, 2, 10, 2), 1.0);
  EXPECT_NEAR(cosine_lr(1.0, 6, 10, 2), 0.5, 1e-15);
  EXPECT_NEAR(cosine_lr(2.0, 10, 10, 0), 0.0, 1e-15);
}

TEST(AdamW, MatchesScalarRecurrence) {
  ModelConfig mc = tiny();
  SegNet net(mc, 1);
  Tensor& p = *net.find_param("norm.bias");
  AdamW opt(AdamWConfig{0.9, 0.999, 1e-8, 0.1});
  double w = p[0], m = 0, v = 0;
  for (int t = 1; t <= 3; ++t) {
    const double g = 0.5 * t - 0.2;
    p.ensure_grad()[0] = g;
    opt.step(net, 0.01);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    w = w - 0.01 * (mh / (std::sqrt(vh) + 1e-8) + 0.1 * w);
    EXPECT_NEAR(p[0], w, 1e-15);
    EXPECT_FALSE(p.has_grad());
  }
  EXPECT_EQ(opt.steps_taken("norm.bias"), 3u);
  EXPECT_EQ(opt.steps_taken("norm.gain"), 0u);
}

}  // namespace
}  // namespace s5
