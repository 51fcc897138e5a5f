#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "embedder.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "io.hpp"

namespace s2vec {

// Cluster labels aligned with dataset order, densely numbered 0..k-1.
struct Partition {
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  int cluster_count() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
  friend bool operator==(const Partition&, const Partition&) = default;
};

// Renumbers labels in order of first appearance.
inline Partition canonical(std::span<const int> labels) {
  std::map<int, int> remap;
  Partition p;
  p.labels.reserve(labels.size());
  for (int l : labels) {
    auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
    p.labels.push_back(it->second);
  }
  return p;
}

struct DbscanParams {
  double eps = 1.0;
  int min_pts = 3;

  void validate() const {
    if (!(eps > 0.0)) throw ConfigError("DBSCAN eps must be positive");
    if (min_pts < 1) throw ConfigError("DBSCAN min_pts must be >= 1");
  }
};

inline DistanceMatrix euclidean_distance_matrix(const EmbeddingMatrix& m) {
  m.validate();
  DistanceMatrix d(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.cols(); ++k) {
        const double diff = m.vectors[i][k] - m.vectors[j][k];
        s += diff * diff;
      }
      d.set(i, j, std::sqrt(s));
    }
  return d;
}

// DBSCAN on precomputed distances. Neighborhoods include the point itself;
// clusters grow from unvisited core points in index order and a border point
// keeps the first cluster that reaches it. Points left as noise become
// singleton clusters numbered after the dense clusters, in index order.
inline Partition dbscan(const DistanceMatrix& d, const DbscanParams& p) {
  p.validate();
  const std::size_t m = d.size();
  auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < m; ++j)
      if (d(i, j) <= p.eps) out.push_back(j);
    return out;
  };
  constexpr int kUnassigned = -1;
  std::vector<int> label(m, kUnassigned);
  std::vector<char> visited(m, 0);
  int next_cluster = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    auto nb = neighbors(i);
    if (nb.size() < static_cast<std::size_t>(p.min_pts)) continue;  // noise for now; may become border
    const int c = next_cluster++;
    label[i] = c;
    std::deque<std::size_t> queue(nb.begin(), nb.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (label[q] == kUnassigned) label[q] = c;
      if (visited[q]) continue;
      visited[q] = 1;
      auto qn = neighbors(q);
      if (qn.size() >= static_cast<std::size_t>(p.min_pts))
        for (std::size_t r : qn)
          if (!visited[r] || label[r] == kUnassigned) queue.push_back(r);
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (label[i] == kUnassigned) label[i] = next_cluster++;
  return Partition{std::move(label)};
}

// q-th percentile (linear interpolation) of the off-diagonal distances.
inline double auto_eps(const DistanceMatrix& d, double percentile = 15.0) {
  auto v = d.off_diagonal_upper();
  if (v.empty()) return 1.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(percentile, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double eps = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  // eps must be positive; fall back to the smallest positive distance.
  if (eps > 0.0) return eps;
  for (double x : v)
    if (x > 0.0) return x;
  return 1.0;
}

// Hubert-Arabie adjusted Rand index. Computed as
// 2 (I * N2 - A * B) / ((A + B) * N2 - 2 A * B) with I = sum C(n_ij, 2),
// A, B the row/column pair sums and N2 = C(n, 2), which is exact in doubles
// for moderate n. A zero denominator yields 1 for identical partitions, else 0.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw DomainError("partitions differ in length");
  if (a.size() < 2) throw DomainError("ARI needs at least 2 elements");
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a.labels[i], b.labels[i]}] += 1.0;
    rows[a.labels[i]] += 1.0;
    cols[b.labels[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : joint) index += pairs(v);
  for (const auto& [k, v] : rows) sum_a += pairs(v);
  for (const auto& [k, v] : cols) sum_b += pairs(v);
  const double n2 = pairs(static_cast<double>(a.size()));
  const double num = 2.0 * (index * n2 - sum_a * sum_b);
  const double den = (sum_a + sum_b) * n2 - 2.0 * sum_a * sum_b;
  if (den == 0.0) return canonical(a.labels) == canonical(b.labels) ? 1.0 : 0.0;
  return num / den;
}

inline double evaluate_ari_percent(const Partition& pred, const Partition& truth) {
  return 100.0 * adjusted_rand_index(pred, truth);
}

inline Partition ground_truth_partition(const GraphDataset& ds, const DbscanParams& p, unsigned threads = 1) {
  return dbscan(pairwise_gh_matrix(ds, threads), p);
}

namespace detail {
// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}
}  // namespace detail

// Spearman correlation over the upper-triangle entries of two matrices.
inline double distance_rank_correlation(const DistanceMatrix& d1, const DistanceMatrix& d2) {
  if (d1.size() != d2.size()) throw DomainError("distance matrices differ in size");
  if (d1.size() < 3) throw DomainError("rank correlation needs at least 3 graphs");
  const auto r1 = detail::average_ranks(d1.off_diagonal_upper());
  const auto r2 = detail::average_ranks(d2.off_diagonal_upper());
  const double n = static_cast<double>(r1.size());
  const double m1 = std::accumulate(r1.begin(), r1.end(), 0.0) / n;
  const double m2 = std::accumulate(r2.begin(), r2.end(), 0.0) / n;
  double cov = 0.0, v1 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    cov += (r1[i] - m1) * (r2[i] - m2);
    v1 += (r1[i] - m1) * (r1[i] - m1);
    v2 += (r2[i] - m2) * (r2[i] - m2);
  }
  if (v1 == 0.0 || v2 == 0.0) throw DomainError("rank correlation undefined for constant distances");
  return cov / std::sqrt(v1 * v2);
}

inline std::string write_partition(const Partition& p, std::span<const std::string> ids) {
  if (ids.size() != p.size()) throw DomainError("id count does not match partition size");
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) out += ids[i] + "\t" + std::to_string(p.labels[i]) + "\n";
  return out;
}

}  // namespace s2vec
