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

// Multi-dataset description read by fine-tuning and evaluation:
//
// {"datasets": [{"name": "style0", "train": "mdf/style0_train.jsonl",
//                "val": "mdf/style0_val.jsonl", "num_classes": 4,
//                "ignore_label": 255}, ...]}
//
// Manifest paths are relative to the directory of the JSON file that lists them.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace s5 {

struct DatasetEntry {
  std::string name;
  std::filesystem::path train;
  std::filesystem::path val;
  std::size_t num_classes = 4;
  std::uint16_t ignore_label = 255;
  bool operator==(const DatasetEntry&) const = default;
};

struct MultiDatasetSpec {
  std::vector<DatasetEntry> datasets;

  std::size_t size() const { return datasets.size(); }
  /// Throws ConfigError on duplicate names, K < 1, or an empty list.
  void validate() const;
  bool operator==(const MultiDatasetSpec&) const = default;
};

/// Paths come back resolved against the file's directory.
MultiDatasetSpec read_dataset_spec(const std::filesystem::path& path);
/// Paths are written relative to the file's directory when they live under it.
void write_dataset_spec(const std::filesystem::path& path, const MultiDatasetSpec& spec);

}  // namespace s5
