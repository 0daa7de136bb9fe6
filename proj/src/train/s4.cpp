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

#include "s5/train/s4.hpp"

#include <cmath>
#include <sstream>

#include "s5/model/inference.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"

namespace s5 {
namespace {

constexpr std::uint32_t kSlotWeak = 0;
constexpr std::uint32_t kSlotStrong = 1;
constexpr std::uint32_t kSlotCutMix = 2;

std::vector<std::uint8_t> valid_labels(const LabelMap& m) {
  std::vector<std::uint8_t> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m.labels[i] != kIgnoreLabel;
  return out;
}

}  // namespace

PseudoLabels pseudo_label(const Tensor& probs) {
  if (probs.rank() != 2) throw DimensionError("pseudo_label: expected [P x K] probabilities");
  const std::size_t P = probs.dim(0), K = probs.dim(1);
  PseudoLabels out{std::vector<std::uint16_t>(P), std::vector<double>(P)};
  for (std::size_t i = 0; i < P; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (probs.at(i, k) > probs.at(i, best)) best = k;
    }
    out.labels[i] = static_cast<std::uint16_t>(best);
    out.confidence[i] = probs.at(i, best);
  }
  return out;
}

std::vector<std::uint8_t> confidence_mask(std::span<const double> confidence, double tau) {
  std::vector<std::uint8_t> out(confidence.size());
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    out[i] = confidence[i] >= tau && confidence[i] > 0.0;
  }
  return out;
}

double supervised_loss(const std::vector<Tensor>& logits, const std::vector<LabelMap>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw DimensionError("supervised_loss: need matching, non-empty batches");
  }
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Graph g(false);
    const auto valid = valid_labels(labels[i]);
    total += g.value(g.cross_entropy_masked(g.input(logits[i]), labels[i].labels, valid))[0];
  }
  return total / static_cast<double>(logits.size());
}

UnsupervisedLoss unsupervised_loss(const std::vector<Tensor>& logits,
                                   const std::vector<PseudoLabels>& targets, double tau) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw DimensionError("unsupervised_loss: need matching, non-empty batches");
  }
  UnsupervisedLoss r;
  std::size_t pixels = 0;
  double sum = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const auto mask = confidence_mask(targets[j].confidence, tau);
    std::size_t count = 0;
    for (auto m : mask) count += m;
    pixels += mask.size();
    r.masked += count;
    if (count == 0) continue;
    Graph g(false);
    const double ce =
        g.value(g.cross_entropy_masked(g.input(logits[j]), targets[j].labels, mask))[0];
    sum += ce * static_cast<double>(count);
  }
  r.value = sum / static_cast<double>(pixels);
  r.mask_fraction = static_cast<double>(r.masked) / static_cast<double>(pixels);
  return r;
}

nlohmann::json StepLog::to_json() const {
  nlohmann::json j{{"step", step},
                   {"L_s", loss_s},
                   {"L_u", loss_u},
                   {"mask_frac", mask_frac},
                   {"lr", lr}};
  j["miou_eval"] = miou_eval ? nlohmann::json(*miou_eval) : nlohmann::json(nullptr);
  return j;
}

PreparedStep prepare_step(SegNet& net, const StepBatch& batch, const TrainConfig& config,
                          std::uint64_t seed, std::size_t step, std::size_t workers) {
  PreparedStep p;
  const std::size_t Bl = batch.labeled.size();
  p.labeled_images.resize(Bl);
  p.labeled_masks.resize(Bl);
  parallel_for(Bl, workers, [&](std::size_t i) {
    const Sample& s = *batch.labeled[i];
    if (!s.mask) throw ValidationError("patch " + s.id + " has no mask");
    RngStream rng = RngStream::for_item(seed, s.id, step, kSlotWeak);
    WeakView v = weak_augment(s.image, &*s.mask, rng);
    p.labeled_images[i] = std::move(v.image);
    p.labeled_masks[i] = std::move(*v.mask);
  });
  if (config.supervised_only) return p;

  const std::size_t Bu = batch.unlabeled.size();
  std::vector<MixItem> mix(Bu);
  p.unlabeled_records.resize(Bu);
  parallel_for(Bu, workers, [&](std::size_t j) {
    const Sample& s = *batch.unlabeled[j];
    RngStream weak_rng = RngStream::for_item(seed, s.id, step, kSlotWeak);
    WeakView v = weak_augment(s.image, nullptr, weak_rng);
    PseudoLabels pl = pseudo_label(predict_probs(net, v.image, 0));
    for (std::size_t i = 0; i < pl.confidence.size(); ++i) {
      if (!v.valid[i]) pl.confidence[i] = 0.0;
    }
    RngStream strong_rng = RngStream::for_item(seed, s.id, step, kSlotStrong);
    mix[j].image = strong_augment(v.image, strong_rng, v.record, config.strong);
    mix[j].labels = std::move(pl.labels);
    mix[j].confidence = std::move(pl.confidence);
    p.unlabeled_records[j] = v.record;
  });
  RngStream cut_rng = RngStream::for_item(seed, "cutmix", step, kSlotCutMix);
  const auto cut = cutmix_batch(mix, cut_rng, config.cutmix);
  for (std::size_t j = 0; j < Bu; ++j) {
    p.unlabeled_records[j].cutmix_box = cut[j].cutmix_box;
    p.unlabeled_records[j].cutmix_partner = cut[j].cutmix_partner;
    p.strong_images.push_back(std::move(mix[j].image));
    p.targets.push_back({std::move(mix[j].labels), std::move(mix[j].confidence)});
  }
  return p;
}

LossTerms step_loss(SegNet& net, const PreparedStep& prepared, const TrainConfig& config,
                    bool backward) {
  LossTerms t;
  const std::size_t Bl = prepared.labeled_images.size();
  if (Bl == 0) throw ConfigError("labeled batch is empty");
  for (std::size_t i = 0; i < Bl; ++i) {
    Graph g(backward);
    const auto valid = valid_labels(prepared.labeled_masks[i]);
    const Var ce = g.cross_entropy_masked(net.forward(g, prepared.labeled_images[i], 0),
                                          prepared.labeled_masks[i].labels, valid);
    const double w = 1.0 / static_cast<double>(Bl);
    t.loss_s += g.value(ce)[0] * w;
    if (backward) g.backward(ce, w);
  }

  const std::size_t Bu = prepared.strong_images.size();
  if (Bu > 0) {
    std::size_t pixels = 0, masked = 0;
    for (const auto& tg : prepared.targets) pixels += tg.labels.size();
    for (std::size_t j = 0; j < Bu; ++j) {
      const auto mask = confidence_mask(prepared.targets[j].confidence, config.tau);
      std::size_t count = 0;
      for (auto m : mask) count += m;
      masked += count;
      if (count == 0) continue;
      Graph g(backward);
      const Var ce = g.cross_entropy_masked(net.forward(g, prepared.strong_images[j], 0),
                                            prepared.targets[j].labels, mask);
      const double w = static_cast<double>(count) / static_cast<double>(pixels);
      t.loss_u += g.value(ce)[0] * w;
      if (backward) g.backward(ce, config.lambda * w);
    }
    t.mask_frac = static_cast<double>(masked) / static_cast<double>(pixels);
  }
  t.total = t.loss_s + config.lambda * t.loss_u;
  return t;
}

StepLog train_step(SegNet& net, AdamW& opt, const StepBatch& batch, const TrainConfig& config,
                   std::uint64_t seed, std::size_t step, std::size_t workers) {
  const PreparedStep prepared = prepare_step(net, batch, config, seed, step, workers);
  net.zero_grad();
  const LossTerms terms = step_loss(net, prepared, config, true);
  StepLog log;
  log.step = step;
  log.loss_s = terms.loss_s;
  log.loss_u = terms.loss_u;
  log.mask_frac = terms.mask_frac;
  log.lr = cosine_lr(config.lr, step, config.steps, config.warmup_steps);
  if (!std::isfinite(terms.total)) {
    net.zero_grad();
    throw NumericError("non-finite loss at step " + std::to_string(step) + ": " +
                       log.to_json().dump());
  }
  opt.step(net, log.lr);
  return log;
}

double evaluate_miou(SegNet& net, const std::vector<Sample>& val, std::size_t dataset_id,
                     std::size_t workers) {
  return miou(evaluate_confusion(net, labeled_view(val), dataset_id, kIgnoreLabel, workers)).mean;
}

PretrainResult pretrain(SegNet init, const std::vector<Sample>& labeled,
                        const std::vector<Sample>& unlabeled, const std::vector<Sample>* val,
                        const TrainConfig& config, std::uint64_t seed, std::size_t workers,
                        const std::function<void(const StepLog&)>& on_step) {
  config.validate();
  if (labeled.empty()) throw ConfigError("pretrain: labeled manifest is empty");
  if (!config.supervised_only && unlabeled.empty()) {
    throw ConfigError("pretrain: unlabeled manifest is empty (use supervised-only mode)");
  }
  PretrainResult r{std::move(init), {}, std::nullopt};
  AdamW opt(AdamWConfig{config.beta1, config.beta2, config.adam_eps, config.weight_decay});
  for (std::size_t step = 0; step < config.steps; ++step) {
    StepBatch batch;
    for (std::size_t i : batch_indices(labeled.size(), config.batch_labeled, step, seed, "labeled")) {
      batch.labeled.push_back(&labeled[i]);
    }
    if (!config.supervised_only) {
      for (std::size_t i :
           batch_indices(unlabeled.size(), config.batch_unlabeled, step, seed, "unlabeled")) {
        batch.unlabeled.push_back(&unlabeled[i]);
      }
    }
    StepLog log;
    try {
      log = train_step(r.net, opt, batch, config, seed, step, workers);
    } catch (const NumericError& e) {
      std::ostringstream dump;
      dump << e.what() << "\nrecent steps:";
      const std::size_t from = r.log.size() > 20 ? r.log.size() - 20 : 0;
      for (std::size_t k = from; k < r.log.size(); ++k) dump << "\n" << r.log[k].to_json().dump();
      throw NumericError(dump.str());
    }
    const bool last = step + 1 == config.steps;
    if (val != nullptr && !val->empty() &&
        (last || (config.eval_every > 0 && (step + 1) % config.eval_every == 0))) {
      log.miou_eval = evaluate_miou(r.net, *val, 0, workers);
      r.final_miou = log.miou_eval;
    }
    if (on_step) on_step(log);
    r.log.push_back(log);
  }
  if (config.steps == 0 && val != nullptr && !val->empty()) {
    r.final_miou = evaluate_miou(r.net, *val, 0, workers);
  }
  return r;
}

}  // namespace s5
