#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "sampler.hpp"

namespace s2vec {

using Token = std::uint32_t;

struct Cell {
  int col = 0;
  int row = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Square cells; cell (0, 0) starts at (min_x, min_y).
struct Grid {
  double min_x = 0.0;
  double min_y = 0.0;
  double cell_size = 1.0;
  int cols = 1;
  int rows = 1;

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Half-open cells [a, b); points outside the grid clamp to the nearest border cell.
inline Cell cell_of(double x, double y, const Grid& grid) {
  auto axis = [&](double v, double origin, int count) {
    const double f = std::floor((v - origin) / grid.cell_size);
    if (!(f >= 0.0)) return 0;
    if (f >= static_cast<double>(count - 1)) return count - 1;
    return static_cast<int>(f);
  };
  return {axis(x, grid.min_x, grid.cols), axis(y, grid.min_y, grid.rows)};
}

struct TokenSequence {
  std::vector<Token> tokens;
  std::string source_graph_id;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Hot cells of a grid, densely numbered in (row, col) order.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(Grid grid, std::vector<Cell> hot_cells, int min_hits)
      : grid_(grid), hot_cells_(std::move(hot_cells)), min_hits_(min_hits) {
    if (!(grid_.cell_size > 0.0) || grid_.cols < 1 || grid_.rows < 1) throw ConfigError("invalid grid");
    if (hot_cells_.empty()) throw ConfigError("vocabulary has no hot cells");
    centroids_.reserve(hot_cells_.size());
    for (std::size_t t = 0; t < hot_cells_.size(); ++t) {
      const Cell c = hot_cells_[t];
      if (c.col < 0 || c.row < 0 || c.col >= grid_.cols || c.row >= grid_.rows)
        throw ConfigError("hot cell outside grid");
      if (!token_of_cell_.emplace(c, static_cast<Token>(t)).second) throw ConfigError("duplicate hot cell");
      centroids_.push_back(centroid_of(c));
    }
    build_lookup();
  }

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<Cell>& hot_cells() const noexcept { return hot_cells_; }
  const std::vector<std::array<double, 2>>& centroids() const noexcept { return centroids_; }
  int min_hits() const noexcept { return min_hits_; }
  std::size_t size() const noexcept { return hot_cells_.size(); }

  std::array<double, 2> centroid_of(Cell c) const {
    return {grid_.min_x + (c.col + 0.5) * grid_.cell_size, grid_.min_y + (c.row + 0.5) * grid_.cell_size};
  }

  std::optional<Token> hot_token(Cell c) const {
    auto it = token_of_cell_.find(c);
    if (it == token_of_cell_.end()) return std::nullopt;
    return it->second;
  }

  // Hot cells map to themselves; cold cells to the hot cell whose centroid is
  // nearest to the cold cell's centroid (ties: smallest token).
  Token token_for_cell(Cell c) const { return lookup_[static_cast<std::size_t>(c.row) * grid_.cols + c.col]; }

  Token token_for_point(double x, double y) const { return token_for_cell(cell_of(x, y, grid_)); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.grid_ == b.grid_ && a.hot_cells_ == b.hot_cells_ && a.min_hits_ == b.min_hits_;
  }

 private:
  void build_lookup() {
    lookup_.resize(static_cast<std::size_t>(grid_.cols) * grid_.rows);
    for (int r = 0; r < grid_.rows; ++r)
      for (int c = 0; c < grid_.cols; ++c) {
        const Cell cell{c, r};
        Token tok = 0;
        if (auto hot = hot_token(cell)) {
          tok = *hot;
        } else {
          const auto p = centroid_of(cell);
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t t = 0; t < centroids_.size(); ++t) {
            const double dx = centroids_[t][0] - p[0], dy = centroids_[t][1] - p[1];
            const double d = dx * dx + dy * dy;
            if (d < best) best = d, tok = static_cast<Token>(t);
          }
        }
        lookup_[static_cast<std::size_t>(r) * grid_.cols + c] = tok;
      }
  }

  Grid grid_;
  std::vector<Cell> hot_cells_;
  int min_hits_ = 1;
  std::map<Cell, Token> token_of_cell_;
  std::vector<std::array<double, 2>> centroids_;
  std::vector<Token> lookup_;
};

// Grid over the bounding box of all path points, one cell of margin on every
// side; cells with at least min_hits points become the vocabulary.
inline Vocabulary build_vocabulary(const std::vector<Path>& paths, double cell_size, int min_hits) {
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (min_hits < 1) throw ConfigError("min_hits must be >= 1");
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  std::size_t points = 0;
  for (const auto& p : paths)
    for (const auto& s : p.steps) {
      lo_x = std::min(lo_x, s.x), hi_x = std::max(hi_x, s.x);
      lo_y = std::min(lo_y, s.y), hi_y = std::max(hi_y, s.y);
      ++points;
    }
  if (points == 0) throw ConfigError("cannot build a vocabulary from empty paths");

  Grid grid;
  grid.cell_size = cell_size;
  grid.min_x = lo_x - cell_size;
  grid.min_y = lo_y - cell_size;
  const double span_x = std::floor((hi_x - grid.min_x) / cell_size) + 2.0;
  const double span_y = std::floor((hi_y - grid.min_y) / cell_size) + 2.0;
  if (span_x * span_y > 1e8) throw ConfigError("cell_size too small: grid would exceed 1e8 cells");
  grid.cols = static_cast<int>(span_x);
  grid.rows = static_cast<int>(span_y);

  std::map<std::pair<int, int>, int> hits;  // keyed (row, col) so iteration is (row, col) order
  for (const auto& p : paths)
    for (const auto& s : p.steps) {
      Cell c = cell_of(s.x, s.y, grid);
      ++hits[{c.row, c.col}];
    }
  std::vector<Cell> hot;
  for (const auto& [rc, count] : hits)
    if (count >= min_hits) hot.push_back({rc.second, rc.first});
  if (hot.empty())
    throw ConfigError("no cell reaches min_hits = " + std::to_string(min_hits) + "; lower the threshold");
  return Vocabulary(grid, std::move(hot), min_hits);
}

// Side length giving roughly `target_cells` cells over the bounding box of the paths.
inline double auto_cell_size(const std::vector<Path>& paths, double target_cells = 100.0) {
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (const auto& p : paths)
    for (const auto& s : p.steps) {
      lo_x = std::min(lo_x, s.x), hi_x = std::max(hi_x, s.x);
      lo_y = std::min(lo_y, s.y), hi_y = std::max(hi_y, s.y);
    }
  if (!(hi_x >= lo_x)) throw ConfigError("cannot size cells from empty paths");
  const double w = hi_x - lo_x, h = hi_y - lo_y;
  double size = std::sqrt(w * h / target_cells);
  if (!(size > 0.0)) size = std::max(w, h) / target_cells;
  if (!(size > 0.0)) size = 1.0;
  return size;
}

inline TokenSequence tokenize_path(const Path& p, const Vocabulary& v) {
  TokenSequence seq;
  seq.source_graph_id = p.source_graph_id;
  seq.tokens.reserve(p.steps.size());
  for (const auto& s : p.steps) seq.tokens.push_back(v.token_for_point(s.x, s.y));
  return seq;
}

// w_u = exp(-|c_u - c_target|) / sum_v exp(-|c_v - c_target|) over centroids.
inline std::vector<double> proximity_weight_row(Token target, const Vocabulary& v) {
  if (target >= v.size()) throw DomainError("token out of range");
  const auto& c = v.centroids();
  std::vector<double> w(c.size());
  double total = 0.0;
  for (std::size_t u = 0; u < c.size(); ++u) {
    w[u] = std::exp(-std::hypot(c[u][0] - c[target][0], c[u][1] - c[target][1]));
    total += w[u];
  }
  for (double& x : w) x /= total;
  return w;
}

// Source of target distributions for the decoder loss. Rows are cached as a
// dense matrix up to `dense_limit` tokens and computed on demand above it.
// One-hot mode turns the loss into plain token cross-entropy.
class ProximityWeights {
 public:
  static constexpr std::size_t kDenseLimit = 4096;

  ProximityWeights(const Vocabulary& vocab, bool one_hot = false, std::size_t top_k = 0)
      : vocab_(&vocab), one_hot_(one_hot), top_k_(top_k) {
    if (!one_hot_ && vocab.size() <= kDenseLimit) {
      dense_.reserve(vocab.size() * vocab.size());
      for (std::size_t t = 0; t < vocab.size(); ++t) {
        auto r = compute(static_cast<Token>(t));
        dense_.insert(dense_.end(), r.begin(), r.end());
      }
    }
  }

  std::size_t size() const noexcept { return vocab_->size(); }
  bool one_hot() const noexcept { return one_hot_; }

  // Writes the row for `target` into `out` (length size()).
  void row(Token target, std::span<double> out) const {
    const std::size_t n = size();
    if (one_hot_) {
      std::fill(out.begin(), out.end(), 0.0);
      out[target] = 1.0;
    } else if (!dense_.empty()) {
      std::copy_n(dense_.begin() + static_cast<std::ptrdiff_t>(target * n), n, out.begin());
    } else {
      auto r = compute(target);
      std::copy(r.begin(), r.end(), out.begin());
    }
  }

  std::vector<double> row(Token target) const {
    std::vector<double> out(size());
    row(target, out);
    return out;
  }

 private:
  std::vector<double> compute(Token target) const {
    auto w = proximity_weight_row(target, *vocab_);
    if (top_k_ == 0 || top_k_ >= w.size()) return w;
    // Keep the k largest (ties by token), renormalize.
    std::vector<std::size_t> order(w.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
    std::vector<double> kept(w.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < top_k_; ++i) total += w[order[i]];
    for (std::size_t i = 0; i < top_k_; ++i) kept[order[i]] = w[order[i]] / total;
    return kept;
  }

  const Vocabulary* vocab_;
  bool one_hot_;
  std::size_t top_k_;
  std::vector<double> dense_;
};

// ---------------------------------------------------------------------------
// Vocabulary file: "grid <min_x> <min_y> <cell_size> <cols> <rows> <min_hits>"
// followed by "cell <token> <col> <row>" lines.

inline std::string write_vocabulary(const Vocabulary& v) {
  const auto& g = v.grid();
  std::string out = "grid " + io::format_exact(g.min_x) + " " + io::format_exact(g.min_y) + " " +
                    io::format_exact(g.cell_size) + " " + std::to_string(g.cols) + " " + std::to_string(g.rows) +
                    " " + std::to_string(v.min_hits()) + "\n";
  for (std::size_t t = 0; t < v.size(); ++t)
    out += "cell " + std::to_string(t) + " " + std::to_string(v.hot_cells()[t].col) + " " +
           std::to_string(v.hot_cells()[t].row) + "\n";
  return out;
}

inline Vocabulary read_vocabulary(std::string_view text) {
  auto all = io::lines(text);
  Grid grid;
  int min_hits = 1;
  bool have_grid = false;
  std::vector<Cell> cells;
  for (std::size_t ln = 0; ln < all.size(); ++ln) {
    auto tok = io::split_ws(all[ln]);
    if (tok.empty()) continue;
    if (tok[0] == "grid") {
      if (have_grid || tok.size() != 7 || !io::parse_double(tok[1], grid.min_x) ||
          !io::parse_double(tok[2], grid.min_y) || !io::parse_double(tok[3], grid.cell_size) ||
          !io::parse_int(tok[4], grid.cols) || !io::parse_int(tok[5], grid.rows) || !io::parse_int(tok[6], min_hits))
        throw ParseError("malformed grid line", ln + 1);
      have_grid = true;
    } else if (tok[0] == "cell") {
      std::size_t token = 0;
      Cell c;
      if (!have_grid || tok.size() != 4 || !io::parse_int(tok[1], token) || !io::parse_int(tok[2], c.col) ||
          !io::parse_int(tok[3], c.row) || token != cells.size())
        throw ParseError("malformed cell line", ln + 1);
      cells.push_back(c);
    } else {
      throw ParseError("unknown vocabulary record", ln + 1);
    }
  }
  if (!have_grid) throw ParseError("vocabulary file has no grid line");
  return Vocabulary(grid, std::move(cells), min_hits);
}

}  // namespace s2vec
