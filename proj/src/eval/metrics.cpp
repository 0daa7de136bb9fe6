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

#include "s5/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "s5/util/error.hpp"

namespace s5 {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(std::span<const std::uint16_t> pred, std::span<const std::uint16_t> truth,
                          std::uint16_t ignore) {
  if (pred.size() != truth.size()) {
    throw DimensionError("confusion: prediction has " + std::to_string(pred.size()) +
                         " pixels, truth " + std::to_string(truth.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == ignore) continue;
    if (truth[i] >= num_classes || pred[i] >= num_classes) {
      throw IndexError("confusion: class index outside [0, " + std::to_string(num_classes) + ")");
    }
    ++counts[truth[i] * num_classes + pred[i]];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes) throw DimensionError("confusion: class counts differ");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

MiouResult miou(const ConfusionMatrix& cm) {
  const std::size_t K = cm.num_classes;
  MiouResult r;
  r.per_class.assign(K, std::numeric_limits<double>::quiet_NaN());
  r.present.assign(K, false);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < K; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    r.present[k] = true;
    r.per_class[k] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += r.per_class[k];
    ++n;
  }
  r.mean = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return r;
}

MiouResult miou(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& truth,
                std::size_t K, std::uint16_t ignore) {
  if (pred.size() != truth.size()) throw DimensionError("miou: batch sizes differ");
  ConfusionMatrix cm(K);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].height != truth[i].height || pred[i].width != truth[i].width) {
      throw DimensionError("miou: prediction and truth shapes differ");
    }
    cm.add(pred[i].labels, truth[i].labels, ignore);
  }
  return miou(cm);
}

}  // namespace s5
