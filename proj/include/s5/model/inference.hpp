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

#include <vector>

#include "s5/eval/metrics.hpp"
#include "s5/model/segnet.hpp"
#include "s5/tensor/label_map.hpp"

namespace s5 {

// Gradient-free passes. They only read parameters, so several threads may
// run them against the same network at once.

/// Per-pixel softmax [H*W x K].
Tensor predict_probs(SegNet& net, const Tensor& image, std::size_t dataset_id);
/// Row-wise argmax, ties to the lower class.
LabelMap argmax_labels(const Tensor& probs, std::size_t height, std::size_t width);
LabelMap predict_labels(SegNet& net, const Tensor& image, std::size_t dataset_id);
/// Mean over tokens of the final-norm features, length embed_dim.
std::vector<double> pooled_features(SegNet& net, const Tensor& image, std::size_t dataset_id);

struct LabeledImage {
  const Tensor* image;
  const LabelMap* mask;
};

/// Confusion over a set of images, merged in input order.
ConfusionMatrix evaluate_confusion(SegNet& net, const std::vector<LabeledImage>& items,
                                   std::size_t dataset_id, std::uint16_t ignore,
                                   std::size_t workers);

}  // namespace s5
