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

#include <cstddef>

#include "s5/augment/augment.hpp"

namespace s5 {

/// Semi-supervised pre-training knobs. Defaults: tau = 0.95 and lambda = 1.0.
struct TrainConfig {
  double tau = 0.95;    // pseudo-label confidence threshold
  double lambda = 1.0;  // unsupervised loss weight
  std::size_t batch_labeled = 8;
  std::size_t batch_unlabeled = 8;
  double lr = 3e-3;  // peak rate of the cosine schedule
  std::size_t warmup_steps = 0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t steps = 600;
  std::size_t eval_every = 100;  // 0 disables periodic evaluation
  bool supervised_only = false;  // skip the unlabeled branch entirely
  StrongParams strong;
  CutMixParams cutmix;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace s5
