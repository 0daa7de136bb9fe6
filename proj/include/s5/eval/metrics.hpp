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
#include <span>
#include <vector>

#include "s5/tensor/label_map.hpp"

namespace s5 {

/// counts[t * K + p]: pixels of true class t predicted as p.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> counts;

  explicit ConfusionMatrix(std::size_t K = 0) : num_classes(K), counts(K * K, 0) {}
  std::uint64_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * num_classes + pred];
  }
  std::uint64_t total() const;
  /// Adds one prediction/truth pair; pixels whose truth is `ignore` are
  /// skipped. Out-of-range classes raise IndexError.
  void add(std::span<const std::uint16_t> pred, std::span<const std::uint16_t> truth,
           std::uint16_t ignore);
  void merge(const ConfusionMatrix& other);
};

struct MiouResult {
  std::vector<double> per_class;  // NaN for classes absent from both
  std::vector<bool> present;
  double mean = 0;
};

/// IoU_k = TP / (TP + FP + FN); classes absent from both prediction and truth
/// are left out of the mean (mean 0 when none is present).
MiouResult miou(const ConfusionMatrix& cm);
MiouResult miou(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& truth,
                std::size_t K, std::uint16_t ignore);

}  // namespace s5
