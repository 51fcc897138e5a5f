#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace s2vec {

struct PathStep {
  NodeId node = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

// A sampled walk. Consecutive steps are the same node (a stay) or adjacent.
struct Path {
  std::vector<PathStep> steps;
  std::string source_graph_id;
  // Started on an isolated node, so every step is a stay.
  bool degenerate = false;

  std::size_t size() const noexcept { return steps.size(); }
  friend bool operator==(const Path&, const Path&) = default;
};

struct SamplerConfig {
  int walk_length = 20;
  int num_walks_per_graph = 10;
  double move_probability = 0.9;
  double smoother = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (walk_length < 2) throw ConfigError("walk_length must be >= 2");
    if (num_walks_per_graph < 1) throw ConfigError("num_walks_per_graph must be >= 1");
    if (!(move_probability > 0.0 && move_probability <= 1.0))
      throw ConfigError("move_probability must lie in (0, 1]");
    if (!(smoother >= 0.0)) throw ConfigError("smoother must be non-negative");
  }
};

// p(u | v) = (deg(u) + eta) / sum_{s in N(v)} (deg(s) + eta), in adjacency order.
inline std::vector<double> transition_distribution(const SpatialGraph& g, NodeId v, double eta) {
  const std::size_t idx = g.index_of(v);
  auto nb = g.neighbors(idx);
  if (nb.empty()) throw DomainError("node " + std::to_string(v) + " has no neighbors");
  std::vector<double> p(nb.size());
  double total = 0.0;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    p[k] = static_cast<double>(g.degree(nb[k])) + eta;
    total += p[k];
  }
  if (!(total > 0.0)) throw DomainError("transition weights vanish (all-zero degrees with eta = 0)");
  for (double& x : p) x /= total;
  return p;
}

// Walk of exactly walk_length steps. Start is uniform over nodes; each step
// moves with probability move_probability to a degree-smoothed neighbor,
// otherwise stays (the stay is recorded).
inline Path sample_path(const SpatialGraph& g, const SamplerConfig& cfg, Rng& rng, std::string graph_id = {}) {
  if (g.size() == 0) throw DomainError("cannot sample from an empty graph");
  Path path;
  path.source_graph_id = std::move(graph_id);
  path.steps.reserve(static_cast<std::size_t>(cfg.walk_length));

  std::uniform_int_distribution<std::size_t> pick_start(0, g.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t current = pick_start(rng);
  path.degenerate = g.degree(current) == 0;

  auto record = [&](std::size_t idx) {
    const auto& n = g.node(idx);
    path.steps.push_back({n.id, n.x, n.y});
  };
  record(current);
  while (path.steps.size() < static_cast<std::size_t>(cfg.walk_length)) {
    if (!path.degenerate && coin(rng) < cfg.move_probability) {
      auto probs = transition_distribution(g, g.node(current).id, cfg.smoother);
      std::discrete_distribution<std::size_t> choose(probs.begin(), probs.end());
      current = g.neighbors(current)[choose(rng)];
    }
    record(current);
  }
  return path;
}

inline Rng walk_stream(std::uint64_t seed, const std::string& graph_id, std::uint64_t walk_index) {
  return substream(mix_seed(seed, hash_string(graph_id)), "walk", walk_index);
}

// num_walks_per_graph walks, walk i drawn from its own (seed, graph_id, i) stream.
inline std::vector<Path> sample_path_set(const SpatialGraph& g, const SamplerConfig& cfg, const std::string& graph_id) {
  cfg.validate();
  std::vector<Path> paths;
  paths.reserve(static_cast<std::size_t>(cfg.num_walks_per_graph));
  for (int w = 0; w < cfg.num_walks_per_graph; ++w) {
    Rng rng = walk_stream(cfg.seed, graph_id, static_cast<std::uint64_t>(w));
    paths.push_back(sample_path(g, cfg, rng, graph_id));
  }
  return paths;
}

// Displaces every coordinate by noise_magnitude * N(0, 1). When `displacement`
// is given it receives the per-node offsets in node order.
inline SpatialGraph corrupt_graph(const SpatialGraph& g, double noise_magnitude, Rng& rng,
                                  std::vector<std::array<double, 2>>* displacement = nullptr) {
  if (!(noise_magnitude >= 0.0)) throw DomainError("noise magnitude must be non-negative");
  if (displacement) displacement->assign(g.size(), {0.0, 0.0});
  if (noise_magnitude == 0.0) return g;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::array<double, 2>> coords(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double dx = noise_magnitude * normal(rng);
    const double dy = noise_magnitude * normal(rng);
    coords[i] = {g.node(i).x + dx, g.node(i).y + dy};
    if (displacement) (*displacement)[i] = {dx, dy};
  }
  return g.with_coordinates(coords);
}

// Same node-id sequence as `clean`, coordinates looked up in `corrupted`.
inline Path replay_path(const Path& clean, const SpatialGraph& corrupted) {
  Path out;
  out.source_graph_id = clean.source_graph_id;
  out.degenerate = clean.degenerate;
  out.steps.reserve(clean.steps.size());
  for (const auto& s : clean.steps) {
    const auto& n = corrupted.node(corrupted.index_of(s.node));
    out.steps.push_back({n.id, n.x, n.y});
  }
  return out;
}

// Debug dump: graph_id \t walk_idx \t node_id \t x \t y
inline std::string write_path_dump(const std::vector<std::vector<Path>>& per_graph) {
  std::string out;
  for (const auto& paths : per_graph)
    for (std::size_t w = 0; w < paths.size(); ++w)
      for (const auto& s : paths[w].steps)
        out += paths[w].source_graph_id + "\t" + std::to_string(w) + "\t" + std::to_string(s.node) + "\t" +
               io::format_exact(s.x) + "\t" + io::format_exact(s.y) + "\n";
  return out;
}

}  // namespace s2vec
