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

#include "s5/train/train_config.hpp"

#include <string>

#include "s5/util/error.hpp"

namespace s5 {

void TrainConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (batch_labeled == 0 || batch_unlabeled == 0) throw ConfigError("batch sizes must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  prob(strong.p_jitter, "p_jitter");
  prob(strong.p_grayscale, "p_grayscale");
  prob(strong.p_blur, "p_blur");
  prob(cutmix.p, "p_cutmix");
  if (!(strong.jitter_range >= 0.0 && strong.jitter_range < 1.0)) {
    throw ConfigError("jitter_range must lie in [0, 1)");
  }
}

}  // namespace s5
