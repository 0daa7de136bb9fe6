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

namespace s5 {

/// Rendering parameters shared by every scene of a corpus.
struct SceneSpec {
  std::size_t image_size = 64;
  std::size_t num_classes = 4;  // background + shape classes
  std::size_t min_objects = 2;
  std::size_t max_objects = 5;
  double noise = 0.03;  // per-pixel Gaussian sigma
  double color_jitter = 0.12;  // per-object offset around the class colour
  double illumination = 0.0;   // scene gain in [1 - r, 1 + r], channel cast +-r/2
  std::size_t style = 0;
  bool ood = false;

  void validate() const;
  bool operator==(const SceneSpec&) const = default;
};

struct CorpusConfig {
  std::size_t labeled = 40;
  std::size_t unlabeled_clean = 200;
  std::size_t unlabeled_ood = 0;
  std::size_t val = 40;
  std::size_t styles = 1;
  // Per-style splits for multi-dataset fine-tuning; 0 skips them.
  std::size_t mdf_train = 0;
  std::size_t mdf_val = 0;
  SceneSpec scene;

  void validate() const;
  bool operator==(const CorpusConfig&) const = default;
};

}  // namespace s5
