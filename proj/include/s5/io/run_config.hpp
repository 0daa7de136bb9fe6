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

// JSON run configuration. Every section and key is optional and defaults to
// the values documented in the README; unknown keys are rejected.
//
// {
//   "seed": 0,
//   "model":    { "image_size", "patch_size", "embed_dim", "ffn_hidden", "depth",
//                 "heads", "num_classes", "num_datasets", "alpha", "moe_enabled",
//                 "dataset_classes" },
//   "train":    { "tau", "lambda", "batch_labeled", "batch_unlabeled", "lr",
//                 "warmup_steps", "weight_decay", "beta1", "beta2", "adam_eps",
//                 "steps", "eval_every", "supervised_only", "p_jitter", "jitter_range",
//                 "p_grayscale", "p_blur", "p_cutmix" },
//   "curation": { "clusters", "budget", "background_class", "max_iterations",
//                 "tolerance" },
//   "synth":    { "labeled", "unlabeled_clean", "unlabeled_ood", "val", "styles",
//                 "mdf_train", "mdf_val", "image_size", "num_classes",
//                 "min_objects", "max_objects", "noise",
//                 "color_jitter", "illumination" },
//   "finetune": { "steps", "batch", "lr", "weight_decay", "schedule" }
// }

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "s5/curation/curation_config.hpp"
#include "s5/finetune/finetune_config.hpp"
#include "s5/model/config.hpp"
#include "s5/synth/synth_config.hpp"
#include "s5/train/train_config.hpp"

namespace s5 {

struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  CurationConfig curation;
  CorpusConfig synth;
  FinetuneConfig finetune;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& c);
/// Throws ConfigError on unknown keys, wrong types, or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace s5
