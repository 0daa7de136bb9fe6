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

#include "s5/model/param_count.hpp"

#include "s5/util/error.hpp"

namespace s5 {

ParamReport param_count(const ModelConfig& config, Regime regime, std::size_t T) {
  if (T == 0) throw ConfigError("param_count needs at least one dataset");
  ModelConfig cfg = config;
  cfg.num_datasets = T;
  cfg.moe_enabled = regime == Regime::MoEMDF;
  if (!cfg.dataset_classes.empty() && cfg.dataset_classes.size() != T) {
    throw ConfigError("dataset_classes lists " + std::to_string(cfg.dataset_classes.size()) +
                      " entries for " + std::to_string(T) + " datasets");
  }
  cfg.validate();

  const std::size_t d = cfg.embed_dim, D = cfg.ffn_hidden, C = cfg.ffn_out(), p = cfg.patch_size;
  const std::size_t norm = 2 * d;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ffn_in = d * D + D;
  const std::size_t ffn_out = D * C + C;
  const std::size_t block = 2 * norm + attn + ffn_in + ffn_out;
  const std::size_t plain_backbone = (3 * p * p * d + d) + cfg.tokens() * d + cfg.depth * block + norm;

  const std::size_t aC = cfg.moe_enabled ? cfg.specific_width() : 0;
  const std::size_t expert = D * aC + aC;  // one dataset, one block

  auto decoder = [&](std::size_t t) {
    const std::size_t k = cfg.classes_for(t);
    return d * p * p * k + p * p * k;
  };

  ParamReport r;
  for (std::size_t t = 0; t < T; ++t) r.decoders += decoder(t);
  switch (regime) {
    case Regime::SDF:
      r.backbone = plain_backbone;
      r.total_single = r.backbone + decoder(0);
      r.total_multiple = T * r.backbone + r.decoders;
      break;
    case Regime::MDF:
      r.backbone = plain_backbone;
      r.total_single = r.backbone + decoder(0);
      r.total_multiple = r.backbone + r.decoders;
      break;
    case Regime::MoEMDF:
      r.backbone = plain_backbone - cfg.depth * expert;
      r.experts = T * cfg.depth * expert;
      r.total_single = r.backbone + decoder(0) + cfg.depth * expert;
      r.total_multiple = r.backbone + r.decoders + r.experts;
      break;
  }
  return r;
}

nlohmann::json to_json(const ParamReport& r) {
  return {{"backbone", r.backbone},         {"decoders", r.decoders},
          {"experts", r.experts},           {"single", r.total_single},
          {"multiple", r.total_multiple}};
}

std::size_t count_buffers(const SegNet& net) {
  std::size_t n = 0;
  net.for_each_param([&](const std::string&, const Tensor& t) { n += t.numel(); });
  return n;
}

}  // namespace s5
