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
#include <vector>

namespace s5 {

/// Architecture of the segmentation network.
struct ModelConfig {
  std::size_t image_size = 64;
  std::size_t patch_size = 8;
  std::size_t embed_dim = 32;    // d; also the FFN output width C
  std::size_t ffn_hidden = 128;  // D
  std::size_t depth = 2;
  std::size_t heads = 2;
  std::size_t num_classes = 4;   // K, background included as class 0
  std::size_t num_datasets = 1;  // T: number of decoders (and experts)
  double alpha = 0.25;           // specific-expert share of C
  bool moe_enabled = false;
  // Per-dataset class counts; empty means num_classes for every dataset.
  std::vector<std::size_t> dataset_classes;

  /// Throws ConfigError on any broken invariant.
  void validate() const;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t tokens() const { return grid() * grid(); }
  std::size_t ffn_out() const { return embed_dim; }
  std::size_t specific_width() const;
  std::size_t shared_width() const { return ffn_out() - specific_width(); }
  std::size_t classes_for(std::size_t dataset) const;

  bool operator==(const ModelConfig&) const = default;
};

/// Specific-expert width alpha*C, or ConfigError when it is not a whole
/// number of channels.
std::size_t split_width(double alpha, std::size_t channels);

}  // namespace s5
