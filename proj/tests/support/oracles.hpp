#pragma once

// Slow, independent reference implementations used as test oracles. None of
// these call into the library's numeric kernels; they only read its data types.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <s2vec/s2vec.hpp>
#include <vector>

namespace oracle {

inline double naive_gromov_hausdorff(const s2vec::SpatialGraph& a, const s2vec::SpatialGraph& b) {
  auto directed = [](const s2vec::SpatialGraph& p, const s2vec::SpatialGraph& q) {
    double worst = 0.0;
    for (const auto& u : p.nodes()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : q.nodes()) best = std::min(best, std::sqrt((u.x - v.x) * (u.x - v.x) + (u.y - v.y) * (u.y - v.y)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

inline s2vec::SpatialGraph random_point_graph(std::mt19937_64& rng, std::size_t n, double scale = 10.0) {
  std::uniform_real_distribution<double> coord(-scale, scale);
  std::vector<s2vec::SpatialNode> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({i, coord(rng), coord(rng)});
  return s2vec::SpatialGraph(std::move(nodes), {});
}

// ---------------------------------------------------------------------------
// DBSCAN straight from the definitions: core points, density-connected
// components of cores, border points attached to the lowest-numbered cluster
// among the cores that reach them, remaining points as trailing singletons.

inline std::vector<int> textbook_dbscan(const s2vec::DistanceMatrix& d, double eps, int min_pts) {
  const std::size_t m = d.size();
  std::vector<char> core(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < m; ++j) count += d(i, j) <= eps;
    core[i] = count >= min_pts;
  }
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (core[i] && core[j] && d(i, j) <= eps) parent[find(i)] = find(j);

  // Number components by their smallest core index.
  std::vector<int> comp_label(m, -1), label(m, -1);
  int next = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (core[i]) {
      auto r = find(i);
      if (comp_label[r] < 0) comp_label[r] = next++;
      label[i] = comp_label[r];
    }
  for (std::size_t i = 0; i < m; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < m; ++j)
      if (core[j] && d(i, j) <= eps && (best < 0 || label[j] < best)) best = label[j];
    label[i] = best;
  }
  for (std::size_t i = 0; i < m; ++i)
    if (label[i] < 0) label[i] = next++;
  return label;
}

// ---------------------------------------------------------------------------
// ARI from the four pair-agreement counts.

inline double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (den == 0.0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / den;
}

// ---------------------------------------------------------------------------
// Spearman: rank by counting, then Pearson on the ranks.

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) less += w < v[i], equal += w == v[i];
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Reference LSTM and sequence loss, written against raw row-major arrays.

struct Cell {
  std::vector<double> h, c;
};

inline Cell lstm_cell(std::span<const double> wx, std::span<const double> wh, std::span<const double> b,
                      std::span<const double> x, const Cell& prev) {
  const std::size_t n = prev.h.size(), d = x.size();
  auto row = [&](std::size_t gate, std::size_t j) {
    const std::size_t r = gate * n + j;
    double z = b[r];
    for (std::size_t k = 0; k < d; ++k) z += wx[r * d + k] * x[k];
    for (std::size_t k = 0; k < n; ++k) z += wh[r * n + k] * prev.h[k];
    return z;
  };
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  Cell out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const double i = sig(row(0, j)), f = sig(row(1, j)), g = std::tanh(row(2, j)), o = sig(row(3, j));
    out.c[j] = f * prev.c[j] + i * g;
    out.h[j] = o * std::tanh(out.c[j]);
  }
  return out;
}

// Target rows come from `target_row(token)`; pass a one-hot builder for plain cross-entropy.
template <class TargetRow>
double sequence_loss(const s2vec::ModelParams& p, const std::vector<s2vec::Token>& corrupted,
                     const std::vector<s2vec::Token>& clean, TargetRow target_row) {
  using P = s2vec::ModelParams;
  const auto& s = p.shape();
  const std::size_t n = s.hidden, d = s.d_emb, V = s.vocab;
  auto emb = [&](s2vec::Token t) { return p.tensor(P::kEmbeddings).subspan(t * d, d); };
  Cell st{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (auto t : corrupted) st = lstm_cell(p.tensor(P::kEncWx), p.tensor(P::kEncWh), p.tensor(P::kEncB), emb(t), st);
  double loss = 0.0;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    auto x = t == 0 ? p.tensor(P::kBos) : emb(clean[t - 1]);
    st = lstm_cell(p.tensor(P::kDecWx), p.tensor(P::kDecWh), p.tensor(P::kDecB), x, st);
    std::vector<double> z(V);
    for (std::size_t u = 0; u < V; ++u) {
      z[u] = s.projection_bias ? p.tensor(P::kProjB)[u] : 0.0;
      for (std::size_t k = 0; k < n; ++k) z[u] += p.tensor(P::kProjW)[u * n + k] * st.h[k];
    }
    double norm = 0.0;
    for (double v : z) norm += std::exp(v);
    const std::vector<double> w = target_row(clean[t]);
    for (std::size_t u = 0; u < V; ++u) loss -= w[u] * (z[u] - std::log(norm));
  }
  return loss;
}

inline double cross_entropy_loss(const s2vec::ModelParams& p, const std::vector<s2vec::Token>& corrupted,
                                 const std::vector<s2vec::Token>& clean) {
  const std::size_t V = p.shape().vocab;
  return sequence_loss(p, corrupted, clean, [V](s2vec::Token t) {
    std::vector<double> w(V, 0.0);
    w[t] = 1.0;
    return w;
  });
}

// ---------------------------------------------------------------------------
// Helpers for building small models and vocabularies.

// V hot cells in one row of unit cells, centroids spaced `cell` apart.
inline s2vec::Vocabulary line_vocabulary(std::size_t V, double cell = 1.0) {
  s2vec::Grid g{0.0, 0.0, cell, static_cast<int>(V), 1};
  std::vector<s2vec::Cell> hot;
  for (std::size_t i = 0; i < V; ++i) hot.push_back({static_cast<int>(i), 0});
  return s2vec::Vocabulary(g, hot, 1);
}

inline s2vec::TokenSequence random_tokens(std::mt19937_64& rng, std::size_t V, std::size_t T) {
  std::uniform_int_distribution<s2vec::Token> pick(0, static_cast<s2vec::Token>(V - 1));
  s2vec::TokenSequence s;
  for (std::size_t t = 0; t < T; ++t) s.tokens.push_back(pick(rng));
  return s;
}

// Perturbs every parameter by U(-r, r) so biases and the BOS vector are non-trivial.
inline s2vec::ModelParams random_params(const s2vec::ModelShape& shape, std::uint64_t seed, double r = 0.5) {
  s2vec::ModelParams p(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-r, r);
  for (double& x : p.data()) x = u(rng);
  return p;
}

struct GradCheck {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t tensors_covered = 0;
};

// Five-point central differences on `per_tensor` random entries of every tensor.
// The fourth-order stencil lets h stay large enough that cancellation in the
// loss difference does not swamp gradients of order 1e-6.
inline GradCheck finite_difference_check(const s2vec::ModelParams& p, const s2vec::TokenSequence& corrupted,
                                         const s2vec::TokenSequence& clean, const s2vec::ProximityWeights& w,
                                         std::uint64_t seed, std::size_t per_tensor, double h = 1e-4) {
  GradCheck out;
  auto analytic = s2vec::backward(s2vec::forward_loss(p, corrupted, clean, w).trace, p);
  std::mt19937_64 rng(seed);
  auto loss_at = [&](std::size_t idx, double delta) {
    s2vec::ModelParams q = p;
    q.data()[idx] += delta;
    return s2vec::forward_loss(q, corrupted, clean, w).loss;
  };
  for (const auto& info : p.tensors()) {
    const std::size_t size = info.rows * info.cols;
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    for (std::size_t k = 0; k < per_tensor; ++k) {
      const std::size_t idx = info.offset + pick(rng);
      const double numeric =
          (8.0 * (loss_at(idx, h) - loss_at(idx, -h)) - (loss_at(idx, 2.0 * h) - loss_at(idx, -2.0 * h))) / (12.0 * h);
      const double a = analytic.data()[idx];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale == 0.0 ? 0.0 : std::abs(a - numeric) / scale;
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
    ++out.tensors_covered;
  }
  return out;
}

}  // namespace oracle
