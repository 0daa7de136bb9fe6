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
#include <string>
#include <vector>

#include "s5/finetune/dataset_spec.hpp"
#include "s5/finetune/finetune_config.hpp"
#include "s5/model/param_count.hpp"
#include "s5/model/segnet.hpp"
#include "s5/train/data.hpp"

namespace s5 {

struct DatasetData {
  std::string name;
  std::size_t num_classes = 4;
  std::uint16_t ignore_label = kIgnoreLabel;
  std::vector<Sample> train;
  std::vector<Sample> val;
};

std::vector<DatasetData> load_datasets(const MultiDatasetSpec& spec, std::size_t workers = 1);

struct ScheduledBatch {
  std::size_t dataset = 0;
  std::vector<std::size_t> indices;  // into that dataset's training set
};

/// Chooses the dataset for each step (round-robin, or proportional to dataset
/// size) and serves each dataset from its own seeded epoch shuffle.
class BatchScheduler {
 public:
  BatchScheduler(std::vector<std::size_t> sizes, std::size_t batch, ScheduleMode mode,
                 std::uint64_t seed);
  ScheduledBatch next();
  std::size_t step() const { return step_; }

 private:
  std::vector<std::size_t> sizes_;
  std::size_t batch_;
  ScheduleMode mode_;
  std::uint64_t seed_;
  std::size_t step_ = 0;
  std::vector<std::size_t> served_;
};

/// Dataset chosen at `step`: step mod T, or a draw proportional to size.
std::size_t schedule_dataset(const std::vector<std::size_t>& sizes, std::size_t step,
                             ScheduleMode mode, std::uint64_t seed);

struct DatasetScore {
  std::string name;
  double miou = 0;
  std::vector<double> per_class;  // NaN for classes absent from both sides
};

struct EvalReport {
  Regime regime = Regime::MDF;
  std::optional<double> alpha;
  std::vector<DatasetScore> datasets;
  double average = 0;
  ParamReport params;

  nlohmann::json to_json() const;
};

/// The trained networks: T single-dataset networks for SDF, one shared
/// network for MDF and MoE-MDF.
struct FinetuneModels {
  Regime regime = Regime::MDF;
  std::vector<SegNet> nets;

  /// Network and dataset id that serve dataset t.
  std::pair<SegNet*, std::size_t> route(std::size_t t);
};

struct FinetuneStep {
  std::size_t step = 0;
  std::size_t dataset = 0;
  double loss = 0;
  double lr = 0;
  nlohmann::json to_json() const;
};

/// Networks at step 0: the pre-trained backbone copied into every network,
/// each decoder started from the pre-trained decoder when the class counts
/// match (fresh otherwise), and for MoE-MDF the FFNs split by slice copying.
/// The pre-trained network must be plain with one dataset (ModelError
/// otherwise); alpha is only accepted for MoE-MDF (ConfigError otherwise).
FinetuneModels init_finetune(const SegNet& pretrained, const std::vector<DatasetData>& data,
                             Regime regime, std::optional<double> alpha, std::uint64_t seed);

struct FinetuneResult {
  FinetuneModels models;
  std::vector<FinetuneStep> log;
  EvalReport report;
};

using FinetuneHook = std::function<void(const FinetuneStep&, FinetuneModels&)>;

FinetuneResult finetune(const SegNet& pretrained, const std::vector<DatasetData>& data,
                        Regime regime, std::optional<double> alpha, const FinetuneConfig& config,
                        std::uint64_t seed, std::size_t workers, const FinetuneHook& hook = {});

/// Per-dataset mIoU on the validation splits, their unweighted mean, and the
/// parameter accounting of the regime.
EvalReport evaluate(FinetuneModels& models, const std::vector<DatasetData>& data,
                    std::size_t workers);

}  // namespace s5
