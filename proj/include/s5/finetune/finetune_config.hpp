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
#include <string_view>

namespace s5 {

enum class Regime { SDF, MDF, MoEMDF };

std::string_view regime_name(Regime r);
/// Accepts "SDF", "MDF", "MoE-MDF" (case-insensitive); ConfigError otherwise.
Regime parse_regime(std::string_view text);

enum class ScheduleMode { RoundRobin, Proportional };

struct FinetuneConfig {
  std::size_t steps = 300;
  std::size_t batch = 8;
  double lr = 1e-3;
  double weight_decay = 0.01;
  ScheduleMode schedule = ScheduleMode::RoundRobin;

  void validate() const;
  bool operator==(const FinetuneConfig&) const = default;
};

}  // namespace s5
