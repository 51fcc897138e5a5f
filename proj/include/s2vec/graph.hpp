#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace s2vec {

using NodeId = std::uint64_t;

struct SpatialNode {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const SpatialNode&, const SpatialNode&) = default;
};

// Undirected simple graph whose vertices carry planar coordinates.
// Immutable after construction; adjacency lists hold node indices sorted ascending.
class SpatialGraph {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  SpatialGraph() = default;

  // Throws DomainError on duplicate ids, unknown edge endpoints, self-loops,
  // duplicate edges, non-finite coordinates or an empty node list.
  SpatialGraph(std::vector<SpatialNode> nodes, std::span<const Edge> edges) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw DomainError("graph has no nodes");
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (!std::isfinite(n.x) || !std::isfinite(n.y))
        throw DomainError("node " + std::to_string(n.id) + " has non-finite coordinates");
      if (!index_.emplace(n.id, i).second) throw DomainError("duplicate node id " + std::to_string(n.id));
    }
    adjacency_.resize(nodes_.size());
    for (const auto& [a, b] : edges) add_edge(a, b);
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  const std::vector<SpatialNode>& nodes() const noexcept { return nodes_; }
  const SpatialNode& node(std::size_t index) const { return nodes_.at(index); }
  std::span<const std::size_t> neighbors(std::size_t index) const { return adjacency_.at(index); }
  std::size_t degree(std::size_t index) const { return adjacency_.at(index).size(); }

  std::optional<std::size_t> find(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(NodeId id) const {
    auto idx = find(id);
    if (!idx) throw DomainError("unknown node id " + std::to_string(id));
    return *idx;
  }

  // Edges as (smaller id, larger id), sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (std::size_t j : adjacency_[i])
        if (nodes_[i].id < nodes_[j].id) out.emplace_back(nodes_[i].id, nodes_[j].id);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Same topology, new coordinates (same order as nodes()).
  SpatialGraph with_coordinates(std::span<const std::array<double, 2>> coords) const {
    if (coords.size() != nodes_.size()) throw DomainError("coordinate count does not match node count");
    SpatialGraph g = *this;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (!std::isfinite(coords[i][0]) || !std::isfinite(coords[i][1]))
        throw DomainError("non-finite coordinate");
      g.nodes_[i].x = coords[i][0];
      g.nodes_[i].y = coords[i][1];
    }
    return g;
  }

  friend bool operator==(const SpatialGraph& a, const SpatialGraph& b) {
    return a.nodes_ == b.nodes_ && a.adjacency_ == b.adjacency_;
  }

 private:
  void add_edge(NodeId a, NodeId b) {
    if (a == b) throw DomainError("self-loop on node " + std::to_string(a));
    auto ia = find(a), ib = find(b);
    if (!ia) throw DomainError("unknown node id " + std::to_string(a));
    if (!ib) throw DomainError("unknown node id " + std::to_string(b));
    auto& la = adjacency_[*ia];
    if (std::find(la.begin(), la.end(), *ib) != la.end())
      throw DomainError("duplicate edge " + std::to_string(a) + " " + std::to_string(b));
    la.push_back(*ib);
    adjacency_[*ib].push_back(*ia);
    ++edge_count_;
  }

  std::vector<SpatialNode> nodes_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::size_t edge_count_ = 0;
};

struct GraphDataset {
  std::vector<SpatialGraph> graphs;
  std::vector<std::string> ids;
  std::optional<std::vector<int>> labels;

  std::size_t size() const noexcept { return graphs.size(); }

  void validate() const {
    if (ids.size() != graphs.size()) throw DataError("dataset id count does not match graph count");
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DataError("duplicate graph id");
    if (labels && labels->size() != graphs.size()) throw DataError("labels do not cover every graph");
  }
};

// Symmetric m x m matrix of non-negative distances with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t m) : size_(m), values_(m * m, 0.0) {}

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    values_[i * size_ + j] = v;
    values_[j * size_ + i] = v;
  }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * size_, size_}; }

  std::vector<double> off_diagonal_upper() const {
    std::vector<double> out;
    out.reserve(size_ * (size_ - (size_ ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < size_; ++i)
      for (std::size_t j = i + 1; j < size_; ++j) out.push_back((*this)(i, j));
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < size_; ++i) {
      if ((*this)(i, i) != 0.0) throw DomainError("distance matrix diagonal is not zero");
      for (std::size_t j = 0; j < size_; ++j) {
        double v = (*this)(i, j);
        if (!std::isfinite(v) || v < 0.0) throw DomainError("distance matrix entry is negative or non-finite");
        if (v != (*this)(j, i)) throw DomainError("distance matrix is not symmetric");
      }
    }
  }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// .sg text format

inline SpatialGraph parse_subgraph(std::string_view text) {
  std::vector<SpatialNode> nodes;
  std::unordered_map<NodeId, std::size_t> node_line;
  struct PendingEdge {
    NodeId a, b;
    std::size_t line;
  };
  std::vector<PendingEdge> edges;

  auto all = io::lines(text);
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    std::string_view line = all[ln];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = io::split_ws(line);
    if (tok.empty()) continue;
    const std::size_t line_no = ln + 1;
    if (tok[0] == "node") {
      SpatialNode n;
      if (tok.size() != 4 || !io::parse_int(tok[1], n.id) || !io::parse_double(tok[2], n.x) ||
          !io::parse_double(tok[3], n.y))
        throw ParseError("malformed node line", line_no);
      if (!std::isfinite(n.x) || !std::isfinite(n.y)) throw ParseError("non-finite coordinate", line_no);
      if (!node_line.emplace(n.id, line_no).second)
        throw ParseError("duplicate node id " + std::to_string(n.id), line_no);
      nodes.push_back(n);
    } else if (tok[0] == "edge") {
      PendingEdge e{0, 0, line_no};
      if (tok.size() != 3 || !io::parse_int(tok[1], e.a) || !io::parse_int(tok[2], e.b))
        throw ParseError("malformed edge line", line_no);
      edges.push_back(e);
    } else {
      throw ParseError("unknown record '" + std::string(tok[0]) + "'", line_no);
    }
  }
  if (nodes.empty()) {
    if (!edges.empty()) throw ParseError("unknown node id " + std::to_string(edges.front().a), edges.front().line);
    throw ParseError("graph has no nodes");
  }

  std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
  std::vector<SpatialGraph::Edge> resolved;
  resolved.reserve(edges.size());
  for (const auto& e : edges) {
    if (!node_line.count(e.a)) throw ParseError("unknown node id " + std::to_string(e.a), e.line);
    if (!node_line.count(e.b)) throw ParseError("unknown node id " + std::to_string(e.b), e.line);
    if (e.a == e.b) throw ParseError("self-loop on node " + std::to_string(e.a), e.line);
    auto key = std::minmax(e.a, e.b);
    if (!seen.emplace(key, e.line).second) throw ParseError("duplicate edge", e.line);
    resolved.emplace_back(e.a, e.b);
  }
  return SpatialGraph(std::move(nodes), resolved);
}

inline std::string write_subgraph(const SpatialGraph& g) {
  std::string out;
  for (const auto& n : g.nodes())
    out += "node " + std::to_string(n.id) + " " + io::format_real(n.x) + " " + io::format_real(n.y) + "\n";
  for (const auto& [a, b] : g.edges()) out += "edge " + std::to_string(a) + " " + std::to_string(b) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Hausdorff distances over node coordinates (edges are ignored).

namespace detail {
inline double squared_distance(const SpatialNode& a, const SpatialNode& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}
}  // namespace detail

// max over v1 in g1 of min over v2 in g2 of |v1 - v2|. The inner scan stops as
// soon as it finds a node closer than the running maximum, since such a v1
// cannot raise the result; the returned value equals the exhaustive one.
inline double one_sided_hausdorff(const SpatialGraph& g1, const SpatialGraph& g2) {
  if (g1.size() == 0 || g2.size() == 0) throw DomainError("Hausdorff distance of an empty graph");
  double worst = 0.0;
  for (const auto& a : g1.nodes()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : g2.nodes()) {
      const double d = detail::squared_distance(a, b);
      if (d < best) {
        best = d;
        if (best <= worst) break;
      }
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

inline double gromov_hausdorff(const SpatialGraph& g1, const SpatialGraph& g2) {
  return std::max(one_sided_hausdorff(g1, g2), one_sided_hausdorff(g2, g1));
}

inline DistanceMatrix pairwise_gh_matrix(const GraphDataset& ds, unsigned threads = 1) {
  const std::size_t m = ds.size();
  DistanceMatrix d(m);
  // Row i owns cells (i, j > i); each cell is written by exactly one task.
  parallel_for(m, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < m; ++j) d.set(i, j, gromov_hausdorff(ds.graphs[i], ds.graphs[j]));
  });
  return d;
}

// ---------------------------------------------------------------------------
// Statistics

struct GraphStats {
  double avg_degree = 0.0;
  double clustering_coefficient = 0.0;
};

inline GraphStats graph_stats(const SpatialGraph& g) {
  if (g.size() == 0) throw DomainError("statistics of an empty graph");
  GraphStats s;
  s.avg_degree = 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.size());
  double cc_sum = 0.0;
  for (std::size_t v = 0; v < g.size(); ++v) {
    auto nb = g.neighbors(v);
    const std::size_t k = nb.size();
    if (k < 2) continue;
    std::size_t triangles = 0;
    for (std::size_t a = 0; a < k; ++a) {
      auto na = g.neighbors(nb[a]);
      for (std::size_t b = a + 1; b < k; ++b)
        if (std::binary_search(na.begin(), na.end(), nb[b])) ++triangles;
    }
    cc_sum += static_cast<double>(triangles) / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
  }
  s.clustering_coefficient = cc_sum / static_cast<double>(g.size());
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic labeled datasets

struct SyntheticConfig {
  int k_clusters = 5;
  int per_cluster = 20;
  int nodes_per_graph = 15;
  double within_jitter = 0.1;
  double center_spread = 4.0;
  double edge_radius = 1.0;
  std::uint64_t seed = 1;
  // Radius of the disk holding each cluster's template nodes; <= 0 means center_spread / 2.
  double template_radius = 0.0;
  // Distinct template nodes per cluster; 0 means nodes_per_graph. With fewer
  // sites than nodes, a member covers every site once and places its remaining
  // nodes at uniformly drawn sites, so members share support but not multiplicity.
  int template_sites = 0;
};

namespace detail {

inline std::array<double, 2> uniform_in_disk(Rng& rng, double cx, double cy, double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  return {cx + r * std::cos(theta), cy + r * std::sin(theta)};
}

// Geometric edges plus one closest-pair link between consecutive components.
inline std::vector<SpatialGraph::Edge> connected_geometric_edges(const std::vector<SpatialNode>& nodes,
                                                                 double radius) {
  const std::size_t n = nodes.size();
  std::vector<SpatialGraph::Edge> edges;
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (squared_distance(nodes[i], nodes[j]) <= r2) {
        edges.emplace_back(nodes[i].id, nodes[j].id);
        parent[root(i)] = root(j);
      }

  // Components ordered by their smallest node index.
  std::vector<std::vector<std::size_t>> components;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = slot.emplace(root(i), components.size());
    if (fresh) components.emplace_back();
    components[it->second].push_back(i);
  }
  for (std::size_t c = 0; c + 1 < components.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i : components[c])
      for (std::size_t j : components[c + 1]) {
        double d = squared_distance(nodes[i], nodes[j]);
        if (d < best) best = d, bi = i, bj = j;
      }
    edges.emplace_back(nodes[bi].id, nodes[bj].id);
  }
  return edges;
}

}  // namespace detail

inline GraphDataset generate_synthetic_dataset(const SyntheticConfig& cfg) {
  if (cfg.k_clusters < 1 || cfg.per_cluster < 1 || cfg.nodes_per_graph < 1)
    throw ConfigError("synthetic dataset counts must be >= 1");
  if (!(cfg.within_jitter >= 0.0) || !(cfg.center_spread > 0.0) || !(cfg.edge_radius >= 0.0))
    throw ConfigError("synthetic dataset distances must be non-negative (spread positive)");
  if (!(cfg.within_jitter < cfg.center_spread)) throw ConfigError("within_jitter must be smaller than center_spread");
  if (cfg.template_sites < 0) throw ConfigError("template_sites must be non-negative");
  const int sites = cfg.template_sites > 0 ? std::min(cfg.template_sites, cfg.nodes_per_graph) : cfg.nodes_per_graph;

  const double template_radius = cfg.template_radius > 0.0 ? cfg.template_radius : cfg.center_spread / 2.0;
  const auto k = static_cast<std::size_t>(cfg.k_clusters);

  // Centers by rejection sampling in a square that comfortably fits k disks.
  Rng center_rng = substream(cfg.seed, "centers");
  const double side = cfg.center_spread * (1.0 + std::sqrt(static_cast<double>(k))) * 1.5;
  std::uniform_real_distribution<double> coord(0.0, side);
  std::vector<std::array<double, 2>> centers;
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; centers.size() < k; ++attempt) {
    if (attempt >= kMaxAttempts) throw ConfigError("cannot place cluster centers; geometry is infeasible");
    std::array<double, 2> c{coord(center_rng), coord(center_rng)};
    bool ok = std::all_of(centers.begin(), centers.end(), [&](const auto& o) {
      return std::hypot(c[0] - o[0], c[1] - o[1]) >= cfg.center_spread;
    });
    if (ok) centers.push_back(c);
  }

  GraphDataset ds;
  ds.labels.emplace();
  const std::size_t total = k * static_cast<std::size_t>(cfg.per_cluster);
  const int width = std::max<int>(3, static_cast<int>(std::to_string(total - 1).size()));
  std::size_t serial = 0;
  for (std::size_t c = 0; c < k; ++c) {
    Rng template_rng = substream(cfg.seed, "template", c);
    std::vector<std::array<double, 2>> tmpl;
    for (int v = 0; v < sites; ++v)
      tmpl.push_back(detail::uniform_in_disk(template_rng, centers[c][0], centers[c][1], template_radius));

    for (int m = 0; m < cfg.per_cluster; ++m, ++serial) {
      Rng member_rng = substream(cfg.seed, "member", serial);
      std::uniform_int_distribution<int> pick_site(0, sites - 1);
      std::vector<SpatialNode> nodes;
      for (int v = 0; v < cfg.nodes_per_graph; ++v) {
        const auto& site = tmpl[static_cast<std::size_t>(v < sites ? v : pick_site(member_rng))];
        auto p = detail::uniform_in_disk(member_rng, site[0], site[1], cfg.within_jitter);
        nodes.push_back({static_cast<NodeId>(v), p[0], p[1]});
      }
      auto edges = detail::connected_geometric_edges(nodes, cfg.edge_radius);
      ds.graphs.emplace_back(std::move(nodes), edges);
      std::string id = std::to_string(serial);
      ds.ids.push_back("g" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id);
      ds.labels->push_back(static_cast<int>(c));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Dataset directories: <id>.sg files plus optional labels.tsv.

inline GraphDataset read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".sg") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .sg files in " + dir.string());

  GraphDataset ds;
  for (const auto& f : files) {
    try {
      ds.graphs.push_back(parse_subgraph(io::read_file(f)));
    } catch (const ParseError& e) {
      throw ParseError(f.filename().string() + ": " + e.what());
    }
    ds.ids.push_back(f.stem().string());
  }

  const auto label_path = dir / "labels.tsv";
  if (fs::exists(label_path)) {
    std::unordered_map<std::string, int> by_id;
    auto text = io::read_file(label_path);
    auto all = io::lines(text);
    for (std::size_t ln = 0; ln < all.size(); ++ln) {
      if (all[ln].empty()) continue;
      auto cols = io::split_tab(all[ln]);
      int label = 0;
      if (cols.size() != 2 || !io::parse_int(cols[1], label)) throw ParseError("malformed labels.tsv row", ln + 1);
      by_id[std::string(cols[0])] = label;
    }
    std::vector<int> labels;
    for (const auto& id : ds.ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("labels.tsv has no label for " + id);
      labels.push_back(it->second);
    }
    ds.labels = std::move(labels);
  }
  ds.validate();
  return ds;
}

inline void write_dataset(const GraphDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < ds.size(); ++i) io::write_file(dir / (ds.ids[i] + ".sg"), write_subgraph(ds.graphs[i]));
  if (ds.labels) {
    std::string text;
    for (std::size_t i = 0; i < ds.size(); ++i) text += ds.ids[i] + "\t" + std::to_string((*ds.labels)[i]) + "\n";
    io::write_file(dir / "labels.tsv", text);
  }
}

// Header row "id\t<id_0>...", then one row per graph.
inline std::string write_distance_matrix(const DistanceMatrix& d, std::span<const std::string> ids) {
  if (ids.size() != d.size()) throw DomainError("id count does not match matrix size");
  std::string out = "id";
  for (const auto& id : ids) out += "\t" + id;
  out += "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < d.size(); ++j) out += "\t" + io::format_exact(d(i, j));
    out += "\n";
  }
  return out;
}

inline DistanceMatrix read_distance_matrix(std::string_view text, std::vector<std::string>* ids_out = nullptr) {
  auto all = io::lines(text);
  if (all.empty()) throw ParseError("empty distance matrix");
  auto header = io::split_tab(all[0]);
  if (header.empty() || header[0] != "id") throw ParseError("distance matrix header must start with 'id'", 1);
  const std::size_t m = header.size() - 1;
  DistanceMatrix d(m);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) {
    if (i + 1 >= all.size()) throw ParseError("distance matrix has too few rows");
    auto cols = io::split_tab(all[i + 1]);
    if (cols.size() != m + 1) throw ParseError("distance matrix row has wrong width", i + 2);
    ids.emplace_back(cols[0]);
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0;
      if (!io::parse_double(cols[j + 1], v)) throw ParseError("bad distance value", i + 2);
      if (j >= i) d.set(i, j, v);
    }
  }
  d.validate();
  if (ids_out) *ids_out = std::move(ids);
  return d;
}

}  // namespace s2vec
