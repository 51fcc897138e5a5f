#include <gtest/gtest.h>

#include <random>
#include <s2vec/cluster.hpp>
#include <s2vec/pipeline.hpp>

#include "oracles.hpp"

using namespace s2vec;

namespace {

DistanceMatrix random_points_matrix(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<std::array<double, 2>> pts(m);
  for (auto& p : pts) p = {u(rng), u(rng)};
  DistanceMatrix d(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) d.set(i, j, std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
  return d;
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> l(n);
  for (auto& x : l) x = u(rng);
  return l;
}

}  // namespace

TEST(Euclidean, Basics) {
  EmbeddingMatrix m{{"a", "b", "c"}, {{0, 0}, {3, 4}, {0, 0}}};
  auto d = euclidean_distance_matrix(m);
  EXPECT_EQ(d(0, 1), 5.0);
  EXPECT_EQ(d(1, 0), 5.0);
  EXPECT_EQ(d(0, 2), 0.0);
  EXPECT_EQ(d(1, 1), 0.0);
}

TEST(Dbscan, TwoSeparatedGroups) {
  DistanceMatrix d(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) d.set(i, j, (i < 3) == (j < 3) ? 0.1 : 10.0);
  auto p = dbscan(d, {1.0, 2});
  EXPECT_EQ(p.labels, (std::vector<int>{0, 0, 0, 1, 1, 1}));
}

TEST(Dbscan, TinyEpsGivesSingletons) {
  std::mt19937_64 rng(1);
  auto d = random_points_matrix(rng, 7);
  auto p = dbscan(d, {1e-9, 2});
  EXPECT_EQ(p.labels, (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(Dbscan, BorderPointGoesToFirstCluster) {
  // Points on a line: 0 1 2 | 3 | 4 5 6. Point 3 has three neighbours counting
  // itself, so with min_pts 4 it is a border point reachable from both groups.
  const std::vector<double> x{0.0, 0.5, 1.0, 2.0, 3.0, 3.5, 4.0};
  DistanceMatrix d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) d.set(i, j, std::abs(x[i] - x[j]));
  auto p = dbscan(d, {1.0, 4});
  EXPECT_EQ(p.labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(p.labels, oracle::textbook_dbscan(d, 1.0, 4));
}

TEST(Dbscan, MatchesTextbookOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + trial % 39;
    auto d = random_points_matrix(rng, m);
    const double eps = 0.5 + (trial % 7) * 0.4;
    const int min_pts = 1 + trial % 5;
    EXPECT_EQ(dbscan(d, {eps, min_pts}).labels, oracle::textbook_dbscan(d, eps, min_pts)) << "trial " << trial;
  }
}

TEST(Dbscan, InvalidParams) {
  DistanceMatrix d(2);
  EXPECT_THROW(dbscan(d, {0.0, 2}), ConfigError);
  EXPECT_THROW(dbscan(d, {1.0, 0}), ConfigError);
}

TEST(AutoEps, PercentileOfOffDiagonal) {
  DistanceMatrix d(3);
  d.set(0, 1, 1.0);
  d.set(0, 2, 2.0);
  d.set(1, 2, 3.0);
  EXPECT_DOUBLE_EQ(auto_eps(d, 50.0), 2.0);
  EXPECT_DOUBLE_EQ(auto_eps(d, 25.0), 1.5);
  EXPECT_DOUBLE_EQ(auto_eps(d, 0.0), 1.0);
  DistanceMatrix z(3);
  z.set(1, 2, 4.0);
  EXPECT_DOUBLE_EQ(auto_eps(z, 15.0), 4.0);
}

TEST(Ari, HandComputedCases) {
  EXPECT_EQ(adjusted_rand_index(Partition{{0, 0, 1, 1}}, Partition{{0, 0, 1, 1}}), 1.0);
  EXPECT_EQ(adjusted_rand_index(Partition{{0, 0, 1, 1}}, Partition{{0, 1, 0, 1}}), -0.5);
  EXPECT_EQ(adjusted_rand_index(Partition{{0, 1, 2}}, Partition{{5, 6, 7}}), 1.0);
  EXPECT_EQ(adjusted_rand_index(Partition{{0, 0, 0}}, Partition{{1, 1, 1}}), 1.0);
  EXPECT_EQ(adjusted_rand_index(Partition{{0, 0, 0}}, Partition{{0, 1, 2}}), 0.0);
  EXPECT_EQ(evaluate_ari_percent(Partition{{0, 0, 1, 1}}, Partition{{0, 1, 0, 1}}), -50.0);
  EXPECT_EQ(evaluate_ari_percent(Partition{{3, 3, 1}}, Partition{{0, 0, 1}}), 100.0);
  EXPECT_THROW(adjusted_rand_index(Partition{{0}}, Partition{{0}}), DomainError);
  EXPECT_THROW(adjusted_rand_index(Partition{{0, 1}}, Partition{{0, 1, 1}}), DomainError);
}

TEST(Ari, MatchesPairCountingAndIsInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 30;
    auto a = random_labels(rng, n, 1 + trial % 5), b = random_labels(rng, n, 1 + trial % 4);
    const double ari = adjusted_rand_index(Partition{a}, Partition{b});
    EXPECT_NEAR(ari, oracle::pair_count_ari(a, b), 1e-12);
    EXPECT_EQ(ari, adjusted_rand_index(Partition{b}, Partition{a}));
    auto relabel = a;
    for (auto& x : relabel) x = 7 - 3 * x;
    EXPECT_EQ(adjusted_rand_index(Partition{relabel}, Partition{b}), ari);
    EXPECT_GE(ari, -1.0);
    EXPECT_LE(ari, 1.0);
  }
}

TEST(Ari, RandomPartitionsAverageNearZero) {
  std::mt19937_64 rng(8);
  double sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial)
    sum += adjusted_rand_index(Partition{random_labels(rng, 40, 4)}, Partition{random_labels(rng, 40, 4)});
  EXPECT_NEAR(sum / 1000.0, 0.0, 0.05);
}

TEST(GroundTruth, SingleGraphAndSeparatedClusters) {
  GraphDataset one{{SpatialGraph({{0, 1, 1}}, {})}, {"a"}, std::nullopt};
  EXPECT_EQ(ground_truth_partition(one, {1.0, 1}).labels, std::vector<int>{0});
  SyntheticConfig sc;
  sc.k_clusters = 4;
  sc.per_cluster = 6;
  sc.within_jitter = 0.05;
  auto ds = generate_synthetic_dataset(sc);
  auto truth = ground_truth_partition(ds, {0.5, 3});
  EXPECT_EQ(adjusted_rand_index(truth, Partition{*ds.labels}), 1.0);
}

TEST(RankCorrelation, IdentityMonotoneAndOracle) {
  std::mt19937_64 rng(3);
  auto d = random_points_matrix(rng, 8);
  EXPECT_NEAR(distance_rank_correlation(d, d), 1.0, 1e-15);
  DistanceMatrix sq(8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) sq.set(i, j, d(i, j) * d(i, j));
  EXPECT_NEAR(distance_rank_correlation(d, sq), 1.0, 1e-15);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = random_points_matrix(rng, 3 + trial % 9), b = random_points_matrix(rng, 3 + trial % 9);
    // coarse rounding introduces ties
    DistanceMatrix bt(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = i + 1; j < b.size(); ++j) bt.set(i, j, std::round(b(i, j)));
    EXPECT_NEAR(distance_rank_correlation(a, bt), oracle::spearman(a.off_diagonal_upper(), bt.off_diagonal_upper()), 1e-10);
  }
  EXPECT_THROW(distance_rank_correlation(DistanceMatrix(2), DistanceMatrix(2)), DomainError);
  EXPECT_THROW(distance_rank_correlation(DistanceMatrix(3), DistanceMatrix(4)), DomainError);
}

TEST(Evaluate, GhRespectingLayoutScoresFull) {
  SyntheticConfig sc;
  sc.k_clusters = 3;
  sc.per_cluster = 5;
  sc.within_jitter = 0.05;
  auto ds = generate_synthetic_dataset(sc);
  // Embedding = each graph's centroid; clusters sit far apart, members close.
  EmbeddingMatrix centroid;
  for (std::size_t g = 0; g < ds.size(); ++g) {
    double x = 0, y = 0;
    for (auto& n : ds.graphs[g].nodes()) x += n.x, y += n.y;
    centroid.graph_ids.push_back(ds.ids[g]);
    centroid.vectors.push_back({x / ds.graphs[g].size(), y / ds.graphs[g].size()});
  }
  EmbeddingMatrix shuffled = centroid;
  std::reverse(shuffled.graph_ids.begin(), shuffled.graph_ids.end());
  std::reverse(shuffled.vectors.begin(), shuffled.vectors.end());
  PipelineConfig cfg;
  // Within-cluster pairs are 30 of 105, so the 25th percentile lies inside them.
  cfg.eps_percentile = 25.0;
  auto report = evaluate_embeddings(ds, {{"centroid", centroid}, {"shuffled", shuffled}}, cfg);
  ASSERT_EQ(report.methods.size(), 2u);
  EXPECT_EQ(report.methods[0].ari_percent, 100.0);
  EXPECT_EQ(report.methods[1].ari_percent, 100.0);
  auto table = write_evaluation_report(report);
  EXPECT_EQ(table, "method\tari_percent\ncentroid\t100.0000\nshuffled\t100.0000\n");

  EmbeddingMatrix partial = centroid;
  partial.graph_ids.pop_back();
  partial.vectors.pop_back();
  EXPECT_THROW(evaluate_embeddings(ds, {{"partial", partial}}, cfg), DataError);
}

TEST(Partition, CanonicalAndWrite) {
  EXPECT_EQ(canonical(std::vector<int>{5, 5, 2, 9, 2}).labels, (std::vector<int>{0, 0, 1, 2, 1}));
  std::vector<std::string> ids{"a", "b"};
  EXPECT_EQ(write_partition(Partition{{1, 0}}, ids), "a\t1\nb\t0\n");
}
