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

#include "s5/finetune/finetune.hpp"

#include <cmath>

#include "s5/augment/augment.hpp"
#include "s5/eval/metrics.hpp"
#include "s5/io/manifest.hpp"
#include "s5/model/inference.hpp"
#include "s5/train/optim.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"
#include "s5/util/rng.hpp"

namespace s5 {
namespace {

constexpr std::uint32_t kSlotFinetune = 4;

std::vector<std::size_t> class_counts(const std::vector<DatasetData>& data) {
  std::vector<std::size_t> out;
  for (const auto& d : data) out.push_back(d.num_classes);
  return out;
}

void copy_decoder(const SegNet& from, std::size_t src, SegNet& to, std::size_t dst) {
  const Linear& a = from.decoders().at(src).proj;
  Linear& b = to.decoders().at(dst).proj;
  if (a.weight.shape() != b.weight.shape()) return;
  b.weight = a.weight.reshaped(a.weight.shape());
  b.bias = a.bias.reshaped(a.bias.shape());
}

}  // namespace

std::vector<DatasetData> load_datasets(const MultiDatasetSpec& spec, std::size_t workers) {
  spec.validate();
  std::vector<DatasetData> out;
  for (const DatasetEntry& e : spec.datasets) {
    DatasetData d;
    d.name = e.name;
    d.num_classes = e.num_classes;
    d.ignore_label = e.ignore_label;
    d.train = load_samples(read_manifest(e.train), true, workers);
    d.val = load_samples(read_manifest(e.val), true, workers);
    out.push_back(std::move(d));
  }
  return out;
}

std::size_t schedule_dataset(const std::vector<std::size_t>& sizes, std::size_t step,
                             ScheduleMode mode, std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("schedule: no datasets");
  if (mode == ScheduleMode::RoundRobin) return step % sizes.size();
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total == 0) throw ConfigError("schedule: every dataset is empty");
  RngStream rng = RngStream::for_item(seed, "schedule", step, 3);
  std::size_t r = rng.below(total);
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (r < sizes[t]) return t;
    r -= sizes[t];
  }
  return sizes.size() - 1;
}

BatchScheduler::BatchScheduler(std::vector<std::size_t> sizes, std::size_t batch,
                               ScheduleMode mode, std::uint64_t seed)
    : sizes_(std::move(sizes)), batch_(batch), mode_(mode), seed_(seed), served_(sizes_.size(), 0) {
  for (std::size_t t = 0; t < sizes_.size(); ++t) {
    if (sizes_[t] == 0) throw ConfigError("schedule: dataset " + std::to_string(t) + " is empty");
  }
}

ScheduledBatch BatchScheduler::next() {
  ScheduledBatch b;
  b.dataset = schedule_dataset(sizes_, step_, mode_, seed_);
  b.indices = batch_indices(sizes_[b.dataset], batch_, served_[b.dataset], seed_,
                            "finetune-" + std::to_string(b.dataset));
  ++served_[b.dataset];
  ++step_;
  return b;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json ds = nlohmann::json::object();
  for (const DatasetScore& s : datasets) {
    nlohmann::json per = nlohmann::json::array();
    for (double v : s.per_class) per.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    ds[s.name] = {{"miou", s.miou}, {"per_class_iou", per}};
  }
  nlohmann::json j{{"regime", std::string(regime_name(regime))},
                   {"datasets", ds},
                   {"average", average},
                   {"params", s5::to_json(params)}};
  j["alpha"] = alpha ? nlohmann::json(*alpha) : nlohmann::json(nullptr);
  return j;
}

std::pair<SegNet*, std::size_t> FinetuneModels::route(std::size_t t) {
  if (regime == Regime::SDF) return {&nets.at(t), 0};
  return {&nets.at(0), t};
}

nlohmann::json FinetuneStep::to_json() const {
  return {{"step", step}, {"dataset", dataset}, {"loss", loss}, {"lr", lr}};
}

FinetuneModels init_finetune(const SegNet& pretrained, const std::vector<DatasetData>& data,
                             Regime regime, std::optional<double> alpha, std::uint64_t seed) {
  const ModelConfig& base = pretrained.config();
  if (base.moe_enabled || base.num_datasets != 1) {
    throw ModelError("fine-tuning starts from a plain single-dataset network");
  }
  if (alpha && regime != Regime::MoEMDF) {
    throw ConfigError("alpha only applies to the MoE-MDF regime, not " +
                      std::string(regime_name(regime)));
  }
  if (data.empty()) throw ConfigError("fine-tuning needs at least one dataset");
  for (const DatasetData& d : data) {
    if (d.train.empty()) throw ConfigError("dataset " + d.name + " has no training patches");
    for (const Sample& s : d.train) {
      if (s.image.dim(0) != base.image_size) {
        throw ModelError("dataset " + d.name + " has " + std::to_string(s.image.dim(0)) +
                         "-pixel patches, the network expects " + std::to_string(base.image_size));
      }
    }
  }
  FinetuneModels m;
  m.regime = regime;
  const std::size_t T = data.size();
  if (regime == Regime::SDF) {
    for (std::size_t t = 0; t < T; ++t) {
      ModelConfig cfg = base;
      cfg.num_datasets = 1;
      cfg.dataset_classes = {data[t].num_classes};
      SegNet net(cfg, seed);
      copy_matching_params(pretrained, net);
      copy_decoder(pretrained, 0, net, 0);
      m.nets.push_back(std::move(net));
    }
    return m;
  }
  ModelConfig cfg = base;
  cfg.num_datasets = T;
  cfg.dataset_classes = class_counts(data);
  SegNet net(cfg, seed);
  copy_matching_params(pretrained, net);
  for (std::size_t t = 0; t < T; ++t) copy_decoder(pretrained, 0, net, t);
  if (regime == Regime::MoEMDF) {
    m.nets.push_back(convert_to_moe(net, alpha.value_or(base.alpha)));
  } else {
    m.nets.push_back(std::move(net));
  }
  return m;
}

FinetuneResult finetune(const SegNet& pretrained, const std::vector<DatasetData>& data,
                        Regime regime, std::optional<double> alpha, const FinetuneConfig& config,
                        std::uint64_t seed, std::size_t workers, const FinetuneHook& hook) {
  config.validate();
  FinetuneResult r{init_finetune(pretrained, data, regime, alpha, seed), {}, {}};
  const AdamWConfig ocfg{0.9, 0.999, 1e-8, config.weight_decay};
  std::vector<AdamW> opts(r.models.nets.size(), AdamW(ocfg));

  std::vector<std::size_t> sizes;
  for (const auto& d : data) sizes.push_back(d.train.size());
  BatchScheduler sched(sizes, config.batch, config.schedule, seed);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const ScheduledBatch b = sched.next();
    const DatasetData& d = data[b.dataset];
    auto [net, route] = r.models.route(b.dataset);
    AdamW& opt = opts[regime == Regime::SDF ? b.dataset : 0];

    std::vector<Tensor> images(b.indices.size());
    std::vector<LabelMap> masks(b.indices.size());
    parallel_for(b.indices.size(), workers, [&](std::size_t k) {
      const Sample& s = d.train[b.indices[k]];
      RngStream rng = RngStream::for_item(seed, s.id, step, kSlotFinetune);
      WeakView v = weak_augment(s.image, &*s.mask, rng);
      images[k] = std::move(v.image);
      masks[k] = std::move(*v.mask);
    });

    net->zero_grad();
    FinetuneStep log;
    log.step = step;
    log.dataset = b.dataset;
    log.lr = cosine_lr(config.lr, step, config.steps);
    const double w = 1.0 / static_cast<double>(images.size());
    for (std::size_t k = 0; k < images.size(); ++k) {
      Graph g(true);
      std::vector<std::uint8_t> valid(masks[k].size());
      for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = masks[k].labels[i] != d.ignore_label;
      const Var ce = g.cross_entropy_masked(net->forward(g, images[k], route), masks[k].labels, valid);
      log.loss += g.value(ce)[0] * w;
      g.backward(ce, w);
    }
    if (!std::isfinite(log.loss)) {
      throw NumericError("non-finite fine-tuning loss at step " + std::to_string(step));
    }
    opt.step(*net, log.lr);
    r.log.push_back(log);
    if (hook) hook(log, r.models);
  }
  r.report = evaluate(r.models, data, workers);
  return r;
}

EvalReport evaluate(FinetuneModels& models, const std::vector<DatasetData>& data,
                    std::size_t workers) {
  EvalReport rep;
  rep.regime = models.regime;
  double sum = 0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    auto [net, route] = models.route(t);
    const ConfusionMatrix cm =
        evaluate_confusion(*net, labeled_view(data[t].val), route, data[t].ignore_label, workers);
    const MiouResult m = miou(cm);
    rep.datasets.push_back({data[t].name, m.mean, m.per_class});
    sum += m.mean;
  }
  rep.average = data.empty() ? 0.0 : sum / static_cast<double>(data.size());

  ModelConfig cfg = models.nets.at(0).config();
  cfg.dataset_classes = class_counts(data);
  if (models.regime == Regime::MoEMDF) rep.alpha = cfg.alpha;
  rep.params = param_count(cfg, models.regime, data.size());
  return rep;
}

}  // namespace s5
