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
#include <numeric>

#include "s5/finetune/finetune.hpp"
#include "s5/synth/scene.hpp"
#include "s5/util/error.hpp"

namespace s5 {
namespace {

TEST(Schedule, RoundRobinAlternates) {
  for (std::size_t s = 0; s < 10; ++s) {
    EXPECT_EQ(schedule_dataset({5, 50}, s, ScheduleMode::RoundRobin, 1), s % 2);
  }
  BatchScheduler sch({4, 9, 2}, 2, ScheduleMode::RoundRobin, 3);
  std::vector<std::size_t> served(3, 0);
  for (int s = 0; s < 9; ++s) {
    const ScheduledBatch b = sch.next();
    ++served[b.dataset];
    EXPECT_EQ(b.indices.size(), 2u);
    for (std::size_t i : b.indices) EXPECT_LT(i, std::vector<std::size_t>({4, 9, 2})[b.dataset]);
  }
  EXPECT_EQ(served, (std::vector<std::size_t>{3, 3, 3}));
}

TEST(Schedule, ProportionalFrequencies) {
  std::size_t second = 0;
  const std::size_t draws = 10000;
  for (std::size_t s = 0; s < draws; ++s) {
    second += schedule_dataset({100, 300}, s, ScheduleMode::Proportional, 7);
  }
  const double ratio = static_cast<double>(second) / static_cast<double>(draws - second);
  EXPECT_NEAR(ratio, 3.0, 3.0 * 0.05);
}

TEST(Schedule, EachDatasetWalksItsOwnEpochs) {
  // Dataset 1 of size 4 served with batch 2 covers every index once per two
  // of its own turns, whatever the other dataset does.
  BatchScheduler sch({3, 4}, 2, ScheduleMode::RoundRobin, 5);
  std::vector<std::size_t> seen;
  for (int s = 0; s < 4; ++s) {
    const auto b = sch.next();
    if (b.dataset == 1) seen.insert(seen.end(), b.indices.begin(), b.indices.end());
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3}));
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

std::vector<Sample> scenes(std::size_t n, std::size_t style, std::uint64_t seed, std::size_t S = 16) {
  SceneSpec spec;
  spec.image_size = S;
  spec.style = style;
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    Scene s = gen_scene(spec, rng);
    out.push_back({"p" + std::to_string(i), "style" + std::to_string(style), std::move(s.image),
                   std::move(s.mask)});
  }
  return out;
}

std::vector<DatasetData> datasets(std::size_t T, std::size_t per = 4) {
  std::vector<DatasetData> d;
  for (std::size_t t = 0; t < T; ++t) {
    d.push_back({"style" + std::to_string(t), 4, kIgnoreLabel, scenes(per, t, 10 + t),
                 scenes(3, t, 100 + t)});
  }
  return d;
}

FinetuneConfig short_cfg() {
  FinetuneConfig c;
  c.steps = 6;
  c.batch = 2;
  c.lr = 3e-3;
  return c;
}

bool same_net(const SegNet& a, const SegNet& b) {
  std::vector<const Tensor*> pa, pb;
  a.for_each_param([&](const std::string&, const Tensor& t) { pa.push_back(&t); });
  b.for_each_param([&](const std::string&, const Tensor& t) { pb.push_back(&t); });
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!pa[i]->identical(*pb[i])) return false;
  return true;
}

TEST(Finetune, SingleDatasetSdfEqualsMdf) {
  const SegNet pre(tiny(), 3);
  const auto data = datasets(1);
  const auto a = finetune(pre, data, Regime::SDF, std::nullopt, short_cfg(), 4, 1);
  const auto b = finetune(pre, data, Regime::MDF, std::nullopt, short_cfg(), 4, 1);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  EXPECT_TRUE(same_net(a.models.nets[0], b.models.nets[0]));
  EXPECT_EQ(a.report.average, b.report.average);
  EXPECT_EQ(a.report.params.total_multiple, b.report.params.total_multiple);
}

std::vector<Tensor> snapshot(const SegNet& net, const std::function<bool(const std::string&)>& pick) {
  std::vector<Tensor> out;
  net.for_each_param([&](const std::string& n, const Tensor& t) {
    if (pick(n)) out.push_back(t.reshaped(t.shape()));
  });
  return out;
}

void expect_same(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].identical(b[i]));
}

TEST(Finetune, RoutingLeavesOtherDatasetsUntouched) {
  const SegNet pre(tiny(), 5);
  const auto data = datasets(3);
  for (Regime r : {Regime::MDF, Regime::MoEMDF}) {
    std::vector<std::vector<Tensor>> before;
    auto others = [](std::size_t t) {
      return [t](const std::string& n) {
        for (std::size_t u = 0; u < 3; ++u) {
          if (u == t) continue;
          if (n.starts_with("decoders." + std::to_string(u) + ".")) return true;
          if (n.find(".ffn.specific." + std::to_string(u) + ".") != std::string::npos) return true;
        }
        return false;
      };
    };
    std::optional<double> alpha;
    if (r == Regime::MoEMDF) alpha = 0.25;
    FinetuneModels init = init_finetune(pre, data, r, alpha, 2);
    std::vector<Tensor> prev_all = snapshot(init.nets[0], [](const std::string&) { return true; });
    std::size_t checked = 0;
    finetune(pre, data, r, alpha, short_cfg(), 2, 1, [&](const FinetuneStep& s, FinetuneModels& m) {
      // Compare against the parameters before this step: reconstruct them by
      // filtering the snapshot in the same visiting order.
      std::vector<Tensor> now_other = snapshot(m.nets[0], others(s.dataset));
      std::vector<Tensor> prev_other;
      std::size_t k = 0;
      m.nets[0].for_each_param([&](const std::string& n, const Tensor&) {
        if (others(s.dataset)(n)) prev_other.push_back(prev_all[k].reshaped(prev_all[k].shape()));
        ++k;
      });
      expect_same(prev_other, now_other);
      // The routed decoder did move.
      const Tensor* own = m.nets[0].find_param("decoders." + std::to_string(s.dataset) + ".weight");
      std::size_t idx = 0, pos = 0;
      m.nets[0].for_each_param([&](const std::string& n, const Tensor&) {
        if (n == "decoders." + std::to_string(s.dataset) + ".weight") pos = idx;
        ++idx;
      });
      EXPECT_FALSE(own->identical(prev_all[pos]));
      prev_all = snapshot(m.nets[0], [](const std::string&) { return true; });
      ++checked;
    });
    EXPECT_EQ(checked, 6u) << regime_name(r);
  }
}

TEST(Finetune, SdfTrainsOnlyTheRoutedNetwork) {
  const SegNet pre(tiny(), 6);
  const auto data = datasets(2);
  FinetuneModels init = init_finetune(pre, data, Regime::SDF, std::nullopt, 1);
  std::vector<std::vector<Tensor>> prev;
  for (const auto& n : init.nets) prev.push_back(snapshot(n, [](const std::string&) { return true; }));
  finetune(pre, data, Regime::SDF, std::nullopt, short_cfg(), 1, 1,
           [&](const FinetuneStep& s, FinetuneModels& m) {
             const std::size_t other = 1 - s.dataset;
             expect_same(prev[other], snapshot(m.nets[other], [](const std::string&) { return true; }));
             for (std::size_t t = 0; t < 2; ++t) {
               prev[t] = snapshot(m.nets[t], [](const std::string&) { return true; });
             }
           });
}

TEST(Finetune, ReportMatchesParamCountAndMean) {
  const SegNet pre(tiny(), 7);
  const auto data = datasets(3);
  const auto r = finetune(pre, data, Regime::MoEMDF, 0.25, short_cfg(), 1, 1);
  ModelConfig c = tiny();
  c.alpha = 0.25;
  const ParamReport want = param_count(c, Regime::MoEMDF, 3);
  EXPECT_EQ(r.report.params.total_multiple, want.total_multiple);
  EXPECT_EQ(r.report.params.total_multiple, count_buffers(r.models.nets[0]));
  double sum = 0;
  for (const auto& d : r.report.datasets) sum += d.miou;
  EXPECT_NEAR(r.report.average, sum / 3, 1e-12);
  const auto j = r.report.to_json();
  EXPECT_EQ(j["regime"], "MoE-MDF");
  EXPECT_EQ(j["alpha"], 0.25);
  EXPECT_TRUE(j["datasets"].contains("style2"));
  EXPECT_EQ(j["params"]["multiple"], want.total_multiple);
}

TEST(Finetune, DuplicatedValidationSetScoresIdentically) {
  const SegNet pre(tiny(), 8);
  auto data = datasets(1);
  data.push_back(data[0]);
  data[1].name = "copy";
  FinetuneModels m = init_finetune(pre, data, Regime::SDF, std::nullopt, 1);
  const EvalReport r = evaluate(m, data, 1);
  EXPECT_EQ(r.datasets[0].miou, r.datasets[1].miou);
}

TEST(Finetune, InitRejectsBadInputs) {
  const auto data = datasets(2);
  ModelConfig moe = tiny();
  moe.moe_enabled = true;
  EXPECT_THROW(init_finetune(SegNet(moe, 1), data, Regime::MDF, std::nullopt, 1), ModelError);
  ModelConfig two = tiny();
  two.num_datasets = 2;
  EXPECT_THROW(init_finetune(SegNet(two, 1), data, Regime::MDF, std::nullopt, 1), ModelError);
  ModelConfig big = tiny();
  big.image_size = 32;
  EXPECT_THROW(init_finetune(SegNet(big, 1), data, Regime::MDF, std::nullopt, 1), ModelError);
  EXPECT_THROW(init_finetune(SegNet(tiny(), 1), data, Regime::MDF, 0.25, 1), ConfigError);
  EXPECT_THROW(parse_regime("moe"), ConfigError);
  EXPECT_EQ(parse_regime("moe-mdf"), Regime::MoEMDF);
}

TEST(Finetune, DecodersStartFromPretrainedWhenShapesMatch) {
  SegNet pre(tiny(), 9);
  auto data = datasets(2);
  data[1].num_classes = 3;
  const FinetuneModels m = init_finetune(pre, data, Regime::MDF, std::nullopt, 1);
  EXPECT_TRUE(m.nets[0].decoders()[0].proj.weight.identical(pre.decoders()[0].proj.weight));
  EXPECT_EQ(m.nets[0].decoders()[1].proj.weight.dim(1), 16u * 3u);
  EXPECT_TRUE(m.nets[0].blocks()[1].ffn_in.weight.identical(pre.blocks()[1].ffn_in.weight));
}

TEST(Evaluation, UntrainedModelIsNearChance) {
  // Default 64x64 network, K = 4, three initialisation seeds.
  std::vector<double> scores;
  const auto val = scenes(12, 0, 77, 64);
  for (std::uint64_t seed : {1, 2, 3}) {
    SegNet net(ModelConfig{}, seed);
    const auto cm = evaluate_confusion(net, labeled_view(val), 0, kIgnoreLabel, 1);
    scores.push_back(miou(cm).mean);
  }
  std::sort(scores.begin(), scores.end());
  EXPECT_LT(scores[1], 0.35);
}

}  // namespace
}  // namespace s5
