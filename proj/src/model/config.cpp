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

#include "s5/model/config.hpp"

#include <cmath>
#include <string>

#include "s5/util/error.hpp"

namespace s5 {

std::size_t split_width(double alpha, std::size_t channels) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  const double w = alpha * static_cast<double>(channels);
  const double r = std::round(w);
  if (std::abs(w - r) > 1e-9) {
    throw ConfigError("alpha*C = " + std::to_string(w) + " is not a whole channel count (C = " +
                      std::to_string(channels) + ")");
  }
  return static_cast<std::size_t>(r);
}

std::size_t ModelConfig::specific_width() const {
  return moe_enabled ? split_width(alpha, ffn_out()) : 0;
}

std::size_t ModelConfig::classes_for(std::size_t dataset) const {
  if (dataset_classes.empty()) return num_classes;
  return dataset_classes.at(dataset);
}

void ModelConfig::validate() const {
  if (image_size == 0 || patch_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) +
                      " is not a positive multiple of patch_size " + std::to_string(patch_size));
  }
  if (embed_dim == 0 || ffn_hidden == 0 || depth == 0) {
    throw ConfigError("embed_dim, ffn_hidden and depth must be positive");
  }
  if (heads == 0 || embed_dim % heads != 0) {
    throw ConfigError("heads " + std::to_string(heads) + " does not divide embed_dim " +
                      std::to_string(embed_dim));
  }
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (num_datasets == 0) throw ConfigError("num_datasets must be positive");
  if (!dataset_classes.empty()) {
    if (dataset_classes.size() != num_datasets) {
      throw ConfigError("dataset_classes lists " + std::to_string(dataset_classes.size()) +
                        " entries for " + std::to_string(num_datasets) + " datasets");
    }
    for (std::size_t k : dataset_classes)
      if (k == 0) throw ConfigError("every dataset needs at least one class");
  }
  if (moe_enabled) split_width(alpha, ffn_out());
}

}  // namespace s5
