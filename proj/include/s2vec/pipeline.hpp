#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "baselines.hpp"
#include "cluster.hpp"
#include "config.hpp"
#include "embedder.hpp"
#include "graph.hpp"
#include "trainer.hpp"

namespace s2vec {

struct MethodEvaluation {
  std::string method;
  double eps = 0.0;
  Partition partition;
  double ari_percent = 0.0;
};

struct EvaluationReport {
  DistanceMatrix gh;
  double truth_eps = 0.0;
  Partition truth;
  std::vector<MethodEvaluation> methods;
};

// Rows reordered to follow the dataset's id order.
inline EmbeddingMatrix align_to_dataset(const EmbeddingMatrix& m, const GraphDataset& ds) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < m.rows(); ++i) row_of.emplace(m.graph_ids[i], i);
  if (row_of.size() != ds.size() || m.rows() != ds.size())
    throw DataError("embedding rows do not match the dataset graphs");
  EmbeddingMatrix out;
  out.graph_ids = ds.ids;
  for (const auto& id : ds.ids) {
    auto it = row_of.find(id);
    if (it == row_of.end()) throw DataError("embedding file has no row for graph " + id);
    out.vectors.push_back(m.vectors[it->second]);
  }
  return out;
}

// Ground truth = DBSCAN over pairwise Gromov-Hausdorff distances; each
// embedding is clustered with DBSCAN over Euclidean distances and scored by ARI%.
inline EvaluationReport evaluate_embeddings(const GraphDataset& ds,
                                            const std::vector<std::pair<std::string, EmbeddingMatrix>>& methods,
                                            const PipelineConfig& cfg) {
  EvaluationReport r;
  r.gh = pairwise_gh_matrix(ds, cfg.threads);
  const auto truth_params = cfg.dbscan_for(r.gh);
  r.truth_eps = truth_params.eps;
  r.truth = dbscan(r.gh, truth_params);
  for (const auto& [name, emb] : methods) {
    MethodEvaluation m;
    m.method = name;
    const auto d = euclidean_distance_matrix(align_to_dataset(emb, ds));
    const auto params = cfg.dbscan_for(d);
    m.eps = params.eps;
    m.partition = dbscan(d, params);
    m.ari_percent = ds.size() >= 2 ? evaluate_ari_percent(m.partition, r.truth) : 100.0;
    r.methods.push_back(std::move(m));
  }
  return r;
}

// Table layout: method \t ari_percent, fixed four decimals.
inline std::string write_evaluation_report(const EvaluationReport& r) {
  std::string out = "method\tari_percent\n";
  for (const auto& m : r.methods) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", m.ari_percent);
    out += m.method + "\t" + buf + "\n";
  }
  return out;
}

inline std::size_t default_pca_components(const PipelineConfig& cfg, const GraphDataset& ds) {
  std::size_t v_max = 0;
  for (const auto& g : ds.graphs) v_max = std::max(v_max, g.size());
  const std::size_t cap = std::min(ds.size(), 2 * v_max);
  const std::size_t want = cfg.pca_components > 0 ? cfg.pca_components : cfg.train.hidden;
  return std::max<std::size_t>(1, std::min(want, cap));
}

}  // namespace s2vec
