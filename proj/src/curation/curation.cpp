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

#include "s5/curation/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "s5/io/tensor_file.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"
#include "s5/util/rng.hpp"

namespace s5 {
namespace {

double sq_dist(const Feature& a, const Feature& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double norm(const Feature& a) {
  double s = 0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

std::size_t nearest(const Feature& f, const std::vector<Feature>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < centroids.size(); ++m) {
    const double d = sq_dist(f, centroids[m]);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

Feature load_feature(const std::filesystem::path& dir, const std::string& id) {
  const auto path = feature_file(dir, id);
  if (!std::filesystem::exists(path)) {
    throw IoError("patch " + id + ": missing feature file " + path.string());
  }
  const Tensor t = read_tensor_file(path);
  return Feature(t.values().begin(), t.values().end());
}

}  // namespace

double average_entropy(const Tensor& probs, int skip_class, double tolerance) {
  if (probs.rank() < 2) throw DimensionError("average_entropy: need a class axis");
  const std::size_t K = probs.shape().back();
  const std::size_t P = K == 0 ? 0 : probs.numel() / K;
  if (P == 0) throw DimensionError("average_entropy: empty probability map");
  double total = 0;
  for (std::size_t i = 0; i < P; ++i) {
    const double* row = probs.data() + i * K;
    double sum = 0, h = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double p = row[k];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("average_entropy: probability " + std::to_string(p) +
                              " outside [0, 1] at pixel " + std::to_string(i));
      }
      sum += p;
      if (static_cast<int>(k) != skip_class && p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw ValidationError("average_entropy: pixel " + std::to_string(i) + " sums to " +
                            std::to_string(sum));
    }
    total += h;
  }
  return total / static_cast<double>(P);
}

std::vector<ScoredPatch> rank_by_entropy(std::vector<ScoredPatch> patches) {
  std::sort(patches.begin(), patches.end(), [](const ScoredPatch& a, const ScoredPatch& b) {
    if (a.entropy != b.entropy) return a.entropy < b.entropy;
    return a.id < b.id;
  });
  return patches;
}

ClusterModel fit_clusters(const std::vector<Feature>& features, std::size_t M, std::uint64_t seed,
                          std::size_t max_iterations, double tolerance) {
  if (M == 0) throw ConfigError("fit_clusters: M must be positive");
  if (features.size() < M) {
    throw ConfigError("fit_clusters: " + std::to_string(features.size()) +
                      " labeled features for " + std::to_string(M) + " clusters");
  }
  const std::size_t dim = features[0].size();
  for (const Feature& f : features) {
    if (f.size() != dim) throw DimensionError("fit_clusters: features differ in dimension");
  }

  RngStream rng(seed, hash_bytes("kmeans++"));
  std::vector<Feature> centroids;
  centroids.push_back(features[rng.below(features.size())]);
  std::vector<double> d2(features.size());
  while (centroids.size() < M) {
    double total = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      d2[i] = sq_dist(features[i], centroids[nearest(features[i], centroids)]);
      total += d2[i];
    }
    std::size_t pick = features.size() - 1;
    if (total > 0) {
      const double r = rng.uniform() * total;
      double acc = 0;
      for (std::size_t i = 0; i < features.size(); ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(features.size());
    }
    centroids.push_back(features[pick]);
  }

  std::vector<std::size_t> assign(features.size());
  ClusterModel model;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < features.size(); ++i) assign[i] = nearest(features[i], centroids);
    std::vector<Feature> next(M, Feature(dim, 0.0));
    std::vector<std::size_t> count(M, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      for (std::size_t k = 0; k < dim; ++k) next[assign[i]][k] += features[i][k];
      ++count[assign[i]];
    }
    double shift = 0;
    for (std::size_t m = 0; m < M; ++m) {
      if (count[m] == 0) {
        next[m] = centroids[m];  // empty cluster keeps its centroid
      } else {
        for (double& v : next[m]) v /= static_cast<double>(count[m]);
      }
      shift = std::max(shift, std::sqrt(sq_dist(next[m], centroids[m])));
    }
    centroids = std::move(next);
    model.iterations = it + 1;
    if (shift < tolerance) break;
  }

  model.labeled_counts.assign(M, 0);
  for (const Feature& f : features) ++model.labeled_counts[nearest(f, centroids)];
  model.labeled_total = features.size();
  for (Feature& c : centroids) {
    const double n = norm(c);
    if (n > 0) {
      for (double& v : c) v /= n;
    }
  }
  model.prototypes = std::move(centroids);
  return model;
}

std::size_t assign_cluster(const Feature& feature, const ClusterModel& model) {
  if (model.prototypes.empty()) throw StateError("assign_cluster: empty cluster model");
  if (feature.size() != model.prototypes[0].size()) {
    throw DimensionError("assign_cluster: feature has " + std::to_string(feature.size()) +
                         " entries, prototypes " + std::to_string(model.prototypes[0].size()));
  }
  const double n = norm(feature);
  if (!(n > 0)) throw ValidationError("assign_cluster: zero-norm feature");
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < model.prototypes.size(); ++m) {
    double dot = 0;
    for (std::size_t k = 0; k < feature.size(); ++k) dot += feature[k] * model.prototypes[m][k];
    const double sim = dot / n;
    if (sim > best_sim) {
      best_sim = sim;
      best = m;
    }
  }
  return best;
}

std::vector<std::size_t> allocate_quotas(const ClusterModel& model, std::size_t budget) {
  const std::size_t total = std::accumulate(model.labeled_counts.begin(),
                                            model.labeled_counts.end(), std::size_t{0});
  if (total == 0) throw ConfigError("allocate_quotas: no labeled samples");
  const std::size_t M = model.labeled_counts.size();
  std::vector<std::size_t> quotas(M);
  std::vector<unsigned __int128> remainder(M);
  std::size_t assigned = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const unsigned __int128 num = static_cast<unsigned __int128>(budget) * model.labeled_counts[m];
    quotas[m] = static_cast<std::size_t>(num / total);
    remainder[m] = num % total;
    assigned += quotas[m];
  }
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < budget; ++k, ++assigned) ++quotas[order[k % M]];
  return quotas;
}

std::vector<ScoredPatch> select_patches(const std::vector<ScoredPatch>& ranked,
                                        std::vector<std::size_t> quotas) {
  std::vector<ScoredPatch> out;
  for (const ScoredPatch& p : ranked) {
    if (!p.cluster || *p.cluster >= quotas.size()) continue;
    std::size_t& left = quotas[*p.cluster];
    if (left > 0) {
      --left;
      out.push_back(p);
    }
  }
  return out;
}

std::filesystem::path prob_file(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + ".probs.s5tn");
}

std::filesystem::path feature_file(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + ".feat.s5tn");
}

CurationResult curate(const Manifest& labeled, const Manifest& unlabeled,
                      const std::filesystem::path& prob_dir,
                      const std::filesystem::path& feature_dir, const CurationConfig& config,
                      std::uint64_t seed, std::size_t workers, CurationStrategy strategy) {
  config.validate();
  const std::size_t N = unlabeled.size();

  // Per-patch scoring and features; slot i belongs to unlabeled record i.
  std::vector<ScoredPatch> scored(N);
  std::vector<Feature> unl_features(N);
  parallel_for(N, workers, [&](std::size_t i) {
    const std::string& id = unlabeled.records[i].id;
    const auto path = prob_file(prob_dir, id);
    if (!std::filesystem::exists(path)) {
      throw IoError("patch " + id + ": missing probability file " + path.string());
    }
    scored[i].id = id;
    try {
      scored[i].entropy = average_entropy(read_tensor_file(path), config.background_class);
    } catch (const ValidationError& e) {
      throw ValidationError("patch " + id + ": " + e.what());
    }
    if (strategy == CurationStrategy::EntropyQuota) unl_features[i] = load_feature(feature_dir, id);
  });

  std::vector<std::size_t> quotas;
  std::vector<std::size_t> labeled_counts;
  std::vector<ScoredPatch> selected;
  std::size_t budget = std::min(config.budget, N);
  if (strategy == CurationStrategy::EntropyQuota) {
    std::vector<Feature> lab_features(labeled.size());
    parallel_for(labeled.size(), workers, [&](std::size_t i) {
      lab_features[i] = load_feature(feature_dir, labeled.records[i].id);
    });
    const ClusterModel model =
        fit_clusters(lab_features, config.clusters, seed, config.max_iterations, config.tolerance);
    parallel_for(N, workers, [&](std::size_t i) {
      scored[i].cluster = assign_cluster(unl_features[i], model);
    });
    budget = config.budget;
    quotas = allocate_quotas(model, budget);
    labeled_counts = model.labeled_counts;
    selected = select_patches(rank_by_entropy(scored), quotas);
  } else {
    RngStream rng(seed, hash_bytes("random-subset"));
    std::vector<std::size_t> perm = rng.permutation(N);
    perm.resize(budget);
    std::sort(perm.begin(), perm.end());
    for (std::size_t i : perm) selected.push_back(scored[i]);
    selected = rank_by_entropy(std::move(selected));
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < N; ++i) index[unlabeled.records[i].id] = i;
  CurationResult result;
  std::map<std::string, std::size_t> by_dataset;
  for (const ScoredPatch& p : selected) {
    const ManifestRecord& r = unlabeled.records[index.at(p.id)];
    result.selected.push_back(r);
    ++by_dataset[r.dataset];
  }

  std::vector<double> entropies;
  for (const ScoredPatch& p : scored) entropies.push_back(p.entropy);
  std::sort(entropies.begin(), entropies.end());

  nlohmann::json report;
  report["strategy"] = strategy == CurationStrategy::Random ? "random" : "entropy_quota";
  report["unlabeled"] = N;
  report["labeled"] = labeled.size();
  report["budget"] = config.budget;
  report["selected"] = selected.size();
  report["selected_fraction"] = N == 0 ? 0.0 : static_cast<double>(selected.size()) / N;
  report["entropy_quantiles"] = {{"min", quantile(entropies, 0.0)},
                                 {"q25", quantile(entropies, 0.25)},
                                 {"median", quantile(entropies, 0.5)},
                                 {"q75", quantile(entropies, 0.75)},
                                 {"max", quantile(entropies, 1.0)}};
  nlohmann::json per_dataset = nlohmann::json::object();
  for (const auto& [name, n] : by_dataset) per_dataset[name] = n;
  report["selected_by_dataset"] = per_dataset;
  if (strategy == CurationStrategy::EntropyQuota) {
    std::vector<std::size_t> assigned(config.clusters, 0), taken(config.clusters, 0);
    for (const ScoredPatch& p : scored) ++assigned[*p.cluster];
    for (const ScoredPatch& p : selected) ++taken[*p.cluster];
    nlohmann::json clusters = nlohmann::json::array();
    for (std::size_t m = 0; m < config.clusters; ++m) {
      clusters.push_back({{"cluster", m},
                          {"labeled", labeled_counts[m]},
                          {"unlabeled", assigned[m]},
                          {"quota", quotas[m]},
                          {"selected", taken[m]}});
    }
    report["clusters"] = clusters;
  }
  result.report = std::move(report);
  return result;
}

}  // namespace s5
