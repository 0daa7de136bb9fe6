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
#include <filesystem>
#include <optional>
#include <vector>

#include "s5/synth/synth_config.hpp"

namespace s5 {

/// Paths written by gen_corpus.
struct CorpusManifests {
  std::filesystem::path labeled;
  std::filesystem::path unlabeled;  // clean followed by alien patches
  std::filesystem::path val;
  std::vector<std::filesystem::path> style_train;  // one per style when mdf_train > 0
  std::vector<std::filesystem::path> style_val;
  std::optional<std::filesystem::path> dataset_spec;  // multi.json
};

/// Writes images (f32 S5TN) and masks (u16 S5TN) under outdir/data plus the
/// manifests. Every patch draws from its own stream keyed by its id, so the
/// tree is byte-identical for any worker count. outdir must already exist.
CorpusManifests gen_corpus(const CorpusConfig& config, std::uint64_t seed,
                           const std::filesystem::path& outdir, std::size_t workers = 1);

}  // namespace s5
