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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s5/curation/curation.hpp"
#include "s5/io/tensor_file.hpp"
#include "s5/util/error.hpp"
#include "s5/util/rng.hpp"
#include "temp_dir.hpp"

namespace s5 {
namespace {

Tensor uniform_probs(std::size_t P, std::size_t K) { return Tensor({P, K}, 1.0 / K); }

TEST(Entropy, UniformOverSixteenClasses) {
  EXPECT_NEAR(average_entropy(uniform_probs(10, 16)), std::log(16.0), 1e-9);
  EXPECT_NEAR(std::log(16.0), 2.772589, 1e-6);
}

TEST(Entropy, OneHotIsZero) {
  Tensor p({3, 3, 4}, 0.0);
  for (std::size_t i = 0; i < 9; ++i) p[i * 4 + i % 4] = 1.0;
  EXPECT_EQ(average_entropy(p), 0.0);
}

TEST(Entropy, TwoPixelArithmetic) {
  Tensor p({1, 2, 2});
  p[0] = p[1] = 0.5;
  p[2] = 1.0;
  p[3] = 0.0;
  EXPECT_NEAR(average_entropy(p), std::log(2.0) / 2, 1e-15);
  EXPECT_NEAR(average_entropy(p), 0.346574, 1e-6);
}

TEST(Entropy, SkippedClassIsNotRenormalised) {
  Tensor p({1, 3});
  p[0] = 0.5;
  p[1] = 0.25;
  p[2] = 0.25;
  EXPECT_NEAR(average_entropy(p, 0), -2 * 0.25 * std::log(0.25), 1e-15);
}

TEST(Entropy, RejectsBadRows) {
  Tensor p({1, 2});
  p[0] = 0.7;
  p[1] = 0.7;
  EXPECT_THROW(average_entropy(p), ValidationError);
  p[0] = -0.1;
  p[1] = 1.1;
  EXPECT_THROW(average_entropy(p), ValidationError);
}

std::vector<ScoredPatch> patches(const std::vector<double>& e) {
  std::vector<ScoredPatch> out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%04zu", i);
    out.push_back({buf, e[i], std::nullopt});
  }
  return out;
}

TEST(Ranking, AscendingUnchangedReversedRestored) {
  const auto asc = patches({0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(rank_by_entropy(asc), asc);
  auto rev = asc;
  std::reverse(rev.begin(), rev.end());
  EXPECT_EQ(rank_by_entropy(rev), asc);
}

TEST(Ranking, MatchesReferenceSort) {
  RngStream rng(1, 1);
  std::vector<double> e(1000);
  for (double& v : e) v = std::floor(rng.uniform() * 200) / 100;  // plenty of ties
  auto p = patches(e);
  auto ref = p;
  std::stable_sort(ref.begin(), ref.end(), [](const ScoredPatch& a, const ScoredPatch& b) {
    return a.entropy < b.entropy;  // ids already ascending
  });
  rng.shuffle(std::span<ScoredPatch>(p));
  EXPECT_EQ(rank_by_entropy(p), ref);
}

TEST(Clusters, SingleClusterIsNormalisedMean) {
  const std::vector<Feature> f = {{1, 0}, {3, 4}, {2, 2}};
  const ClusterModel m = fit_clusters(f, 1, 5);
  const double mx = 2, my = 2, n = std::sqrt(8.0);
  EXPECT_NEAR(m.prototypes[0][0], mx / n, 1e-12);
  EXPECT_NEAR(m.prototypes[0][1], my / n, 1e-12);
  EXPECT_EQ(m.labeled_counts, (std::vector<std::size_t>{3}));
  EXPECT_EQ(m.labeled_total, 3u);
}

std::vector<Feature> two_clouds(std::size_t a, std::size_t b, std::uint64_t seed) {
  RngStream rng(seed, 2);
  std::vector<Feature> f;
  for (std::size_t i = 0; i < a; ++i) f.push_back({10 + rng.normal() * 0.1, rng.normal() * 0.1, 1});
  for (std::size_t i = 0; i < b; ++i) f.push_back({rng.normal() * 0.1, 10 + rng.normal() * 0.1, 1});
  return f;
}

TEST(Clusters, SeparatedCloudsFormOneClusterEach) {
  const auto f = two_clouds(7, 4, 3);
  const ClusterModel m = fit_clusters(f, 2, 11);
  // Exhaustive oracle: the clustering must split the points exactly along
  // the clouds.
  std::vector<std::size_t> counts = m.labeled_counts;
  std::sort(counts.begin(), counts.end());
  EXPECT_EQ(counts, (std::vector<std::size_t>{4, 7}));
  const std::size_t ca = assign_cluster(f[0], m), cb = assign_cluster(f[10], m);
  EXPECT_NE(ca, cb);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(assign_cluster(f[i], m), i < 7 ? ca : cb);
}

TEST(Clusters, DuplicatedDataDoublesCounts) {
  const auto f = two_clouds(5, 3, 4);
  auto twice = f;
  twice.insert(twice.end(), f.begin(), f.end());
  const ClusterModel a = fit_clusters(f, 2, 7), b = fit_clusters(twice, 2, 7);
  for (std::size_t m = 0; m < 2; ++m) {
    const std::size_t mb = assign_cluster(a.prototypes[m], b);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.prototypes[m][k], b.prototypes[mb][k], 1e-12);
    EXPECT_EQ(2 * a.labeled_counts[m], b.labeled_counts[mb]);
  }
}

TEST(Clusters, TooFewPointsIsConfigError) {
  EXPECT_THROW(fit_clusters({{1.0}}, 2, 1), ConfigError);
}

ClusterModel axis_model(std::size_t M, std::size_t dim) {
  ClusterModel m;
  for (std::size_t i = 0; i < M; ++i) {
    Feature f(dim, 0.0);
    f[i % dim] = 1.0;
    if (i >= dim) f[(i + 1) % dim] = 0.5;
    const double n = std::sqrt(std::inner_product(f.begin(), f.end(), f.begin(), 0.0));
    for (double& v : f) v /= n;
    m.prototypes.push_back(f);
  }
  return m;
}

TEST(Assign, PrototypeAndScaledPrototype) {
  const ClusterModel m = axis_model(5, 5);
  EXPECT_EQ(assign_cluster(m.prototypes[3], m), 3u);
  Feature scaled = m.prototypes[3];
  for (double& v : scaled) v *= 7.5;
  EXPECT_EQ(assign_cluster(scaled, m), 3u);
}

TEST(Assign, MatchesExhaustiveScan) {
  RngStream rng(6, 6);
  ClusterModel m;
  for (int i = 0; i < 10; ++i) {
    Feature f(6);
    for (double& v : f) v = rng.normal();
    const double n = std::sqrt(std::inner_product(f.begin(), f.end(), f.begin(), 0.0));
    for (double& v : f) v /= n;
    m.prototypes.push_back(f);
  }
  for (int t = 0; t < 200; ++t) {
    Feature x(6);
    for (double& v : x) v = rng.normal();
    const double nx = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    std::size_t best = 0;
    double best_s = -2;
    for (std::size_t k = 0; k < 10; ++k) {
      const double s = std::inner_product(x.begin(), x.end(), m.prototypes[k].begin(), 0.0) / nx;
      if (s > best_s) {
        best_s = s;
        best = k;
      }
    }
    EXPECT_EQ(assign_cluster(x, m), best);
  }
}

ClusterModel counts_model(std::vector<std::size_t> counts) {
  ClusterModel m = axis_model(counts.size(), counts.size());
  m.labeled_counts = counts;
  m.labeled_total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  return m;
}

TEST(Quotas, ExactProportion) {
  EXPECT_EQ(allocate_quotas(counts_model({50, 30, 20}), 10), (std::vector<std::size_t>{5, 3, 2}));
}

TEST(Quotas, LargestRemainderTieGoesToLowestIndex) {
  EXPECT_EQ(allocate_quotas(counts_model({1, 1, 1}), 10), (std::vector<std::size_t>{4, 3, 3}));
}

TEST(Quotas, SumAndWithinOneOfRealValue) {
  RngStream rng(8, 8);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> counts(1 + rng.below(12));
    for (auto& c : counts) c = rng.below(1000);
    counts[0] += 1;
    const ClusterModel m = counts_model(counts);
    const auto q = allocate_quotas(m, 10000);
    EXPECT_EQ(std::accumulate(q.begin(), q.end(), std::size_t{0}), 10000u);
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double real = 10000.0 * counts[k] / m.labeled_total;
      EXPECT_LT(std::abs(static_cast<double>(q[k]) - real), 1.0);
    }
  }
}

std::vector<ScoredPatch> clustered(std::size_t n, std::size_t M, std::uint64_t seed) {
  RngStream rng(seed, 3);
  std::vector<double> e(n);
  for (double& v : e) v = rng.uniform();
  auto p = patches(e);
  for (auto& x : p) x.cluster = rng.below(M);
  return rank_by_entropy(p);
}

TEST(Select, QuotasCoverEverything) {
  const auto p = clustered(30, 3, 1);
  EXPECT_EQ(select_patches(p, {30, 30, 30}), p);
}

TEST(Select, ZeroQuotaExcludesCluster) {
  const auto p = clustered(30, 3, 2);
  for (const auto& s : select_patches(p, {10, 0, 10})) EXPECT_NE(*s.cluster, 1u);
}

TEST(Select, MatchesGreedyReference) {
  const auto p = clustered(50, 3, 3);
  // Reference: walk the ranking, keep a taken-count per cluster.
  std::vector<ScoredPatch> ref;
  std::size_t taken[3] = {0, 0, 0};
  const std::size_t quota[3] = {5, 3, 2};
  for (const auto& x : p) {
    if (taken[*x.cluster] < quota[*x.cluster]) {
      ++taken[*x.cluster];
      ref.push_back(x);
    }
  }
  EXPECT_EQ(select_patches(p, {5, 3, 2}), ref);
  EXPECT_EQ(ref.size(), 10u);
}

// A small on-disk corpus with probability and feature files.
struct Fixture {
  testing::TempDir dir;
  Manifest labeled, unlabeled;

  Fixture(std::size_t clean, std::size_t noise, std::uint64_t seed) {
    labeled.dir = unlabeled.dir = dir.path();
    RngStream rng(seed, 4);
    auto feat = [&](const std::string& id, bool a) {
      Tensor f({3});
      f[0] = a ? 1 + 0.1 * rng.normal() : 0.1 * rng.normal();
      f[1] = a ? 0.1 * rng.normal() : 1 + 0.1 * rng.normal();
      f[2] = 0.5;
      write_tensor_file(feature_file(dir.path(), id), f, DType::F64);
    };
    for (std::size_t i = 0; i < 12; ++i) {
      const std::string id = "lab-" + std::to_string(i);
      labeled.records.push_back({id, id + ".img", id + ".mask", "synthetic", "labeled"});
      feat(id, i % 3 != 0);
    }
    for (std::size_t i = 0; i < clean + noise; ++i) {
      const bool is_noise = i >= clean;
      const std::string id = (is_noise ? "ood-" : "unl-") + std::to_string(i);
      unlabeled.records.push_back(
          {id, id + ".img", std::nullopt, is_noise ? "ood" : "synthetic", "unlabeled"});
      feat(id, i % 2 == 0);
      Tensor p({4, 4, 4});
      for (std::size_t q = 0; q < 16; ++q) {
        if (is_noise) {
          for (std::size_t k = 0; k < 4; ++k) p[q * 4 + k] = 0.25;
        } else {
          const double c = 0.8 + 0.15 * rng.uniform();
          const std::size_t top = rng.below(4);
          for (std::size_t k = 0; k < 4; ++k) p[q * 4 + k] = k == top ? c : (1 - c) / 3;
        }
      }
      write_tensor_file(prob_file(dir.path(), id), p, DType::F64);
    }
  }
};

TEST(Curate, FullBudgetSingleClusterTakesEverything) {
  Fixture fx(10, 3, 1);
  CurationConfig c;
  c.clusters = 1;
  c.budget = 13;
  const auto r = curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 1);
  EXPECT_EQ(r.selected.size(), 13u);
  EXPECT_EQ(r.report["selected_fraction"], 1.0);
}

TEST(Curate, NoisePatchesAreNeverSelected) {
  Fixture fx(20, 10, 2);
  CurationConfig c;
  c.clusters = 2;
  c.budget = 12;
  const auto r = curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 3);
  EXPECT_EQ(r.selected.size(), 12u);
  for (const auto& s : r.selected) EXPECT_EQ(s.dataset, "synthetic") << s.id;
  EXPECT_EQ(r.report["selected_by_dataset"].value("ood", 0), 0);
  std::size_t quota_sum = 0;
  for (const auto& cl : r.report["clusters"]) quota_sum += cl["quota"].get<std::size_t>();
  EXPECT_EQ(quota_sum, 12u);
}

TEST(Curate, ZeroBudgetGivesEmptySelectionAndValidReport) {
  Fixture fx(5, 2, 3);
  CurationConfig c;
  c.clusters = 2;
  c.budget = 0;
  const auto r = curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 1);
  EXPECT_TRUE(r.selected.empty());
  EXPECT_EQ(r.report["selected"], 0);
  EXPECT_EQ(r.report["unlabeled"], 7);
}

TEST(Curate, RandomStrategyIsSeededSubset) {
  Fixture fx(20, 5, 4);
  CurationConfig c;
  c.clusters = 2;
  c.budget = 8;
  const auto a = curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 5, 1,
                        CurationStrategy::Random);
  const auto b = curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 5, 3,
                        CurationStrategy::Random);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.selected.size(), 8u);
  EXPECT_EQ(a.report["strategy"], "random");
}

TEST(Curate, MissingProbabilityFileNamesThePatch) {
  Fixture fx(4, 0, 5);
  std::filesystem::remove(prob_file(fx.dir.path(), "unl-2"));
  CurationConfig c;
  c.clusters = 1;
  c.budget = 2;
  try {
    curate(fx.labeled, fx.unlabeled, fx.dir.path(), fx.dir.path(), c, 1);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("unl-2"), std::string::npos);
  }
}

}  // namespace
}  // namespace s5
