#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "sampler.hpp"
#include "seq2seq.hpp"
#include "tokenizer.hpp"

namespace s2vec {

enum class LatentKind { hidden, hidden_cell };

struct EmbeddingMatrix {
  std::vector<std::string> graph_ids;
  std::vector<std::vector<double>> vectors;

  std::size_t rows() const noexcept { return vectors.size(); }
  std::size_t cols() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }

  void validate() const {
    if (graph_ids.size() != vectors.size()) throw DomainError("embedding ids do not match row count");
    for (const auto& v : vectors) {
      if (v.size() != cols()) throw DomainError("ragged embedding matrix");
      for (double x : v)
        if (!std::isfinite(x)) throw NumericError("non-finite embedding value");
    }
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

// Final encoder state over the clean sequence: h, or [h, c] for hidden_cell.
inline std::vector<double> embed_path(const ModelParams& p, const TokenSequence& tokens,
                                      LatentKind kind = LatentKind::hidden) {
  auto enc = encode(p, tokens);
  std::vector<double> out = std::move(enc.final.hidden);
  if (kind == LatentKind::hidden_cell) out.insert(out.end(), enc.final.cell.begin(), enc.final.cell.end());
  return out;
}

// Mean of the path embeddings, summed in list order.
inline std::vector<double> embed_graph(const ModelParams& p, const Vocabulary& vocab, const std::vector<Path>& paths,
                                       LatentKind kind = LatentKind::hidden) {
  if (paths.empty()) throw DomainError("cannot embed a graph without paths");
  std::vector<double> sum;
  for (const auto& path : paths) {
    auto v = embed_path(p, tokenize_path(path, vocab), kind);
    if (sum.empty()) sum.assign(v.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) sum[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(paths.size());
  for (double& x : sum) x *= inv;
  return sum;
}

// Row i embeds graph i over the walks sample_path_set draws with `sampler`;
// with the training sampler config these are exactly the training walks.
inline EmbeddingMatrix embed_dataset(const ModelParams& p, const Vocabulary& vocab, const GraphDataset& ds,
                                     const SamplerConfig& sampler, LatentKind kind = LatentKind::hidden,
                                     unsigned threads = 1) {
  EmbeddingMatrix m;
  m.graph_ids = ds.ids;
  m.vectors.resize(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t g) {
    m.vectors[g] = embed_graph(p, vocab, sample_path_set(ds.graphs[g], sampler, ds.ids[g]), kind);
  });
  m.validate();
  return m;
}

// TSV: header "id\tdim_0...", one row per graph, 17 significant digits.
inline std::string write_embeddings(const EmbeddingMatrix& m) {
  m.validate();
  std::string out = "id";
  for (std::size_t k = 0; k < m.cols(); ++k) out += "\tdim_" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += m.graph_ids[i];
    for (double x : m.vectors[i]) out += "\t" + io::format_exact(x);
    out += "\n";
  }
  return out;
}

inline EmbeddingMatrix read_embeddings(std::string_view text) {
  auto all = io::lines(text);
  if (all.empty()) throw ParseError("empty embedding file");
  auto header = io::split_tab(all[0]);
  if (header.empty() || header[0] != "id") throw ParseError("embedding header must start with 'id'", 1);
  const std::size_t dims = header.size() - 1;
  EmbeddingMatrix m;
  for (std::size_t ln = 1; ln < all.size(); ++ln) {
    if (all[ln].empty()) continue;
    auto cols = io::split_tab(all[ln]);
    if (cols.size() != dims + 1) throw ParseError("embedding row has wrong width", ln + 1);
    m.graph_ids.emplace_back(cols[0]);
    std::vector<double> row(dims);
    for (std::size_t k = 0; k < dims; ++k)
      if (!io::parse_double(cols[k + 1], row[k])) throw ParseError("bad embedding value", ln + 1);
    m.vectors.push_back(std::move(row));
  }
  m.validate();
  return m;
}

}  // namespace s2vec
