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

#include "s5/model/inference.hpp"

#include "s5/util/parallel.hpp"

namespace s5 {

Tensor predict_probs(SegNet& net, const Tensor& image, std::size_t dataset_id) {
  Graph g(false);
  const Var probs = g.softmax_rows(net.forward(g, image, dataset_id));
  return g.value(probs).reshaped(g.value(probs).shape());
}

LabelMap argmax_labels(const Tensor& probs, std::size_t height, std::size_t width) {
  const std::size_t K = probs.dim(1);
  LabelMap out(height, width);
  for (std::size_t i = 0; i < height * width; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (probs.at(i, k) > probs.at(i, best)) best = k;
    }
    out.labels[i] = static_cast<std::uint16_t>(best);
  }
  return out;
}

LabelMap predict_labels(SegNet& net, const Tensor& image, std::size_t dataset_id) {
  Graph g(false);
  const Tensor& logits = g.value(net.forward(g, image, dataset_id));
  const std::size_t S = net.config().image_size;
  return argmax_labels(logits, S, S);
}

std::vector<double> pooled_features(SegNet& net, const Tensor& image, std::size_t dataset_id) {
  Graph g(false);
  const Tensor& tokens = g.value(net.encode(g, image, dataset_id));
  const std::size_t N = tokens.dim(0), d = tokens.dim(1);
  std::vector<double> out(d, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < d; ++k) out[k] += tokens.at(n, k);
  for (double& v : out) v /= static_cast<double>(N);
  return out;
}

ConfusionMatrix evaluate_confusion(SegNet& net, const std::vector<LabeledImage>& items,
                                   std::size_t dataset_id, std::uint16_t ignore,
                                   std::size_t workers) {
  const std::size_t K = net.config().classes_for(dataset_id);
  std::vector<ConfusionMatrix> parts(items.size(), ConfusionMatrix(K));
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const LabelMap pred = predict_labels(net, *items[i].image, dataset_id);
    parts[i].add(pred.labels, items[i].mask->labels, ignore);
  });
  ConfusionMatrix total(K);
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace s5
