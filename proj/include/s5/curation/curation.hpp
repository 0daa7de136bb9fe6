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
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "s5/curation/curation_config.hpp"
#include "s5/io/manifest.hpp"
#include "s5/tensor/tensor.hpp"

namespace s5 {

/// Mean per-pixel entropy in nats of a probability field whose last axis
/// holds the classes ([H x W x K] or [P x K]), with 0 log 0 = 0. The
/// `skip_class` channel (if >= 0) is left out of the sum without
/// renormalising the rest. Rows must sum to 1 within `tolerance`, otherwise
/// ValidationError.
double average_entropy(const Tensor& probs, int skip_class = -1, double tolerance = 1e-6);

struct ScoredPatch {
  std::string id;
  double entropy = 0;
  std::optional<std::size_t> cluster;
  bool operator==(const ScoredPatch&) const = default;
};

/// Ascending entropy, ties by id.
std::vector<ScoredPatch> rank_by_entropy(std::vector<ScoredPatch> patches);

using Feature = std::vector<double>;

struct ClusterModel {
  std::vector<Feature> prototypes;  // unit norm
  std::vector<std::size_t> labeled_counts;
  std::size_t labeled_total = 0;
  std::size_t iterations = 0;

  std::size_t size() const { return prototypes.size(); }
};

/// k-means++ seeding then Lloyd iterations in Euclidean space until every
/// centroid moves less than `tolerance` or `max_iterations` pass. Prototypes
/// are the normalised centroids; counts come from the final assignment.
ClusterModel fit_clusters(const std::vector<Feature>& features, std::size_t M, std::uint64_t seed,
                          std::size_t max_iterations = 100, double tolerance = 1e-6);

/// Prototype with the largest cosine similarity; ties go to the lower index.
std::size_t assign_cluster(const Feature& feature, const ClusterModel& model);

/// B_u * N_m / B_l rounded by largest remainder (ties to the lower cluster)
/// so the quotas add up to B_u exactly.
std::vector<std::size_t> allocate_quotas(const ClusterModel& model, std::size_t budget);

/// One pass in the given order: a patch is taken while its cluster still has
/// quota; skipped patches are not reconsidered.
std::vector<ScoredPatch> select_patches(const std::vector<ScoredPatch>& ranked,
                                        std::vector<std::size_t> quotas);

enum class CurationStrategy { EntropyQuota, Random };

struct CurationResult {
  std::vector<ManifestRecord> selected;  // paths relative to the unlabeled manifest
  nlohmann::json report;
};

/// Per-patch files read by curate(), as written by the infer command.
std::filesystem::path prob_file(const std::filesystem::path& dir, const std::string& id);
std::filesystem::path feature_file(const std::filesystem::path& dir, const std::string& id);

/// Scores every unlabeled patch, clusters labeled features, assigns, allocates
/// quotas and selects. The Random strategy draws a uniform subset of size
/// B_u instead (a baseline) and still reports entropies.
CurationResult curate(const Manifest& labeled, const Manifest& unlabeled,
                      const std::filesystem::path& prob_dir,
                      const std::filesystem::path& feature_dir, const CurationConfig& config,
                      std::uint64_t seed, std::size_t workers = 1,
                      CurationStrategy strategy = CurationStrategy::EntropyQuota);

}  // namespace s5
