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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s5/io/manifest.hpp"
#include "s5/model/inference.hpp"
#include "s5/tensor/label_map.hpp"
#include "s5/tensor/tensor.hpp"

namespace s5 {

struct Sample {
  std::string id;
  std::string dataset;
  Tensor image;                  // [H x W x 3]
  std::optional<LabelMap> mask;  // present for labeled records
};

/// Reads every record's image (and mask when the record has one). With
/// `require_masks` a record without a mask is a ValidationError.
std::vector<Sample> load_samples(const Manifest& manifest, bool require_masks,
                                 std::size_t workers = 1);

std::vector<LabeledImage> labeled_view(const std::vector<Sample>& samples);

/// Indices for one batch: the data is walked in epochs, each epoch in its own
/// seeded order, and step s takes positions [s*batch, (s+1)*batch).
std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t step,
                                       std::uint64_t seed, std::string_view stream);

}  // namespace s5
