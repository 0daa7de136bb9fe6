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
#include <json.hpp>

#include "s5/finetune/finetune_config.hpp"
#include "s5/model/config.hpp"
#include "s5/model/segnet.hpp"

namespace s5 {

/// Exact parameter counts for serving T datasets under one regime.
///
/// backbone: everything but decoders and specific experts (for MoE-MDF this is
/// the backbone with reduced shared experts). total_single is what one dataset
/// needs; total_multiple is what all T need:
///   SDF      T * backbone + sum of decoders
///   MDF      backbone + sum of decoders
///   MoE-MDF  backbone + sum of decoders + T * depth * (D * aC + aC)
struct ParamReport {
  std::size_t backbone = 0;
  std::size_t decoders = 0;  // summed over datasets
  std::size_t experts = 0;   // summed over datasets and blocks
  std::size_t total_single = 0;
  std::size_t total_multiple = 0;
  bool operator==(const ParamReport&) const = default;
};

/// Uses config's architecture with T datasets; config.dataset_classes, when
/// set, must hold T entries. alpha is config.alpha and only matters for
/// MoE-MDF.
ParamReport param_count(const ModelConfig& config, Regime regime, std::size_t T);

nlohmann::json to_json(const ParamReport& r);

/// Sum of every parameter buffer's length.
std::size_t count_buffers(const SegNet& net);

}  // namespace s5
