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

#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <optional>
#include <vector>

#include "s5/augment/augment.hpp"
#include "s5/model/segnet.hpp"
#include "s5/train/data.hpp"
#include "s5/train/optim.hpp"
#include "s5/train/train_config.hpp"

namespace s5 {

struct PseudoLabels {
  std::vector<std::uint16_t> labels;  // argmax, ties to the lower class
  std::vector<double> confidence;     // max probability; 0 marks a pixel to drop
};

/// From a [P x K] probability field.
PseudoLabels pseudo_label(const Tensor& probs);

/// Pixels that take part in the unsupervised loss: confidence >= tau and > 0.
std::vector<std::uint8_t> confidence_mask(std::span<const double> confidence, double tau);

/// Mean over images of the mean pixel cross entropy, ignore-label pixels
/// skipped. logits[i] is [H*W x K].
double supervised_loss(const std::vector<Tensor>& logits, const std::vector<LabelMap>& labels);

struct UnsupervisedLoss {
  double value = 0;
  double mask_fraction = 0;
  std::size_t masked = 0;
};

/// Cross entropy against the pseudo-labels over masked-in pixels, divided by
/// the total pixel count of the batch.
UnsupervisedLoss unsupervised_loss(const std::vector<Tensor>& logits,
                                   const std::vector<PseudoLabels>& targets, double tau);

struct StepLog {
  std::size_t step = 0;
  double loss_s = 0;
  double loss_u = 0;
  double mask_frac = 0;
  double lr = 0;
  std::optional<double> miou_eval;

  nlohmann::json to_json() const;
};

/// Everything a step needs once augmentation and pseudo-labelling are done.
struct PreparedStep {
  std::vector<Tensor> labeled_images;
  std::vector<LabelMap> labeled_masks;
  std::vector<Tensor> strong_images;
  std::vector<PseudoLabels> targets;  // aligned with strong_images
  std::vector<AugRecord> unlabeled_records;
};

struct StepBatch {
  std::vector<const Sample*> labeled;
  std::vector<const Sample*> unlabeled;  // ignored in supervised-only mode
};

/// Weak views for both batches, pseudo-labels from a gradient-free pass over
/// the weak unlabeled views, then photometric strong views and CutMix. Every
/// random draw comes from a stream keyed by (seed, patch id, step, slot).
PreparedStep prepare_step(SegNet& net, const StepBatch& batch, const TrainConfig& config,
                          std::uint64_t seed, std::size_t step, std::size_t workers);

struct LossTerms {
  double loss_s = 0;
  double loss_u = 0;
  double mask_frac = 0;
  double total = 0;  // loss_s + lambda * loss_u
};

/// Evaluates L = L_s + lambda L_u; with `backward` set, gradients of L are
/// accumulated into the parameters image by image in a fixed order.
LossTerms step_loss(SegNet& net, const PreparedStep& prepared, const TrainConfig& config,
                    bool backward);

/// One optimisation step. NumericError on a non-finite loss.
StepLog train_step(SegNet& net, AdamW& opt, const StepBatch& batch, const TrainConfig& config,
                   std::uint64_t seed, std::size_t step, std::size_t workers);

struct PretrainResult {
  SegNet net;
  std::vector<StepLog> log;
  std::optional<double> final_miou;
};

/// Runs `config.steps` steps, evaluating mIoU on `val` (when given) every
/// eval_every steps and after the last one. ConfigError on empty inputs.
PretrainResult pretrain(SegNet init, const std::vector<Sample>& labeled,
                        const std::vector<Sample>& unlabeled, const std::vector<Sample>* val,
                        const TrainConfig& config, std::uint64_t seed, std::size_t workers,
                        const std::function<void(const StepLog&)>& on_step = {});

double evaluate_miou(SegNet& net, const std::vector<Sample>& val, std::size_t dataset_id,
                     std::size_t workers);

}  // namespace s5
