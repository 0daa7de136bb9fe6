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

#include "s5/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace s5 {

void AdamW::step(SegNet& net, double lr) {
  net.for_each_param([&](const std::string& name, Tensor& p) {
    if (!p.has_grad()) return;
    Slot& s = slots_[name];
    if (s.m.empty()) {
      s.m.assign(p.numel(), 0.0);
      s.v.assign(p.numel(), 0.0);
    }
    ++s.t;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.t));
    auto g = p.grad();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
      s.v[i] = b2 * s.v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = s.m[i] / c1, vhat = s.v[i] / c2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * p[i]);
    }
    p.clear_grad();
  });
}

std::size_t AdamW::steps_taken(const std::string& name) const {
  auto it = slots_.find(name);
  return it == slots_.end() ? 0 : it->second.t;
}

double cosine_lr(double base, std::size_t step, std::size_t total, std::size_t warmup) {
  if (step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return base;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

}  // namespace s5
