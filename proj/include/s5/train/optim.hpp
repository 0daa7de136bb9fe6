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
#include <map>
#include <string>
#include <vector>

#include "s5/model/segnet.hpp"

namespace s5 {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam moments with decoupled weight decay. Only buffers that received a
/// gradient since the last step move (and count a step for bias correction);
/// every gradient buffer is cleared afterwards.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  void step(SegNet& net, double lr);
  std::size_t steps_taken(const std::string& name) const;

 private:
  struct Slot {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  AdamWConfig config_;
  std::map<std::string, Slot> slots_;
};

/// Linear warm-up to `base` over `warmup` steps, then half-cosine decay to 0
/// at `total`.
double cosine_lr(double base, std::size_t step, std::size_t total, std::size_t warmup = 0);

}  // namespace s5
