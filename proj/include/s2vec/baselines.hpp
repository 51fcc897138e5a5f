#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "embedder.hpp"
#include "error.hpp"
#include "graph.hpp"

namespace s2vec {

// Coordinates sorted by (x, y, id), interleaved [x1, y1, x2, y2, ...], zero-padded to 2 * v_max.
inline std::vector<double> flatten_graph(const SpatialGraph& g, std::size_t v_max) {
  if (g.size() > v_max) throw DomainError("graph has more nodes than v_max");
  std::vector<SpatialNode> nodes = g.nodes();
  std::sort(nodes.begin(), nodes.end(), [](const SpatialNode& a, const SpatialNode& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.id < b.id;
  });
  std::vector<double> out(2 * v_max, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out[2 * i] = nodes[i].x;
    out[2 * i + 1] = nodes[i].y;
  }
  return out;
}

struct PcaResult {
  Eigen::MatrixXd projected;         // rows x n_components
  Eigen::MatrixXd components;        // n_components x cols, orthonormal rows
  Eigen::VectorXd mean;              // cols
  Eigen::VectorXd eigenvalues;       // n_components, non-increasing
  Eigen::VectorXd explained_variance_ratio;
  std::size_t zeroed_components = 0; // trailing components dropped for rank deficiency
};

// Projects mean-centred rows onto the leading eigenvectors of the sample
// covariance. Each component is signed so its largest-magnitude entry is
// positive. Components whose eigenvalue is numerically zero are replaced by
// zero rows and counted in zeroed_components.
inline PcaResult pca_project(const Eigen::MatrixXd& X, std::size_t n_components) {
  const auto rows = static_cast<std::size_t>(X.rows()), cols = static_cast<std::size_t>(X.cols());
  if (rows < 2) throw DomainError("PCA needs at least 2 rows");
  if (n_components < 1 || n_components > std::min(rows, cols))
    throw DomainError("n_components must lie in [1, min(rows, cols)]");

  PcaResult r;
  r.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centred = X.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(rows - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");

  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();
  const double total = std::max(0.0, evals.sum());
  const double tol = std::max(1e-12, 1e-10 * std::abs(evals(evals.size() - 1)));

  const auto n = static_cast<Eigen::Index>(n_components);
  r.components = Eigen::MatrixXd::Zero(n, X.cols());
  r.eigenvalues = Eigen::VectorXd::Zero(n);
  r.explained_variance_ratio = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = evals.size() - 1 - k;
    const double lambda = evals(src);
    if (lambda <= tol) {
      ++r.zeroed_components;
      continue;
    }
    Eigen::VectorXd v = evecs.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.row(k) = v.transpose();
    r.eigenvalues(k) = lambda;
    r.explained_variance_ratio(k) = total > 0 ? lambda / total : 0.0;
  }
  r.projected = centred * r.components.transpose();
  return r;
}

inline Eigen::MatrixXd flatten_dataset(const GraphDataset& ds) {
  std::size_t v_max = 0;
  for (const auto& g : ds.graphs) v_max = std::max(v_max, g.size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(2 * v_max));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto row = flatten_graph(ds.graphs[i], v_max);
    for (std::size_t k = 0; k < row.size(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return X;
}

// Flatten every graph with a shared v_max, then project onto n components.
inline EmbeddingMatrix pca_baseline_embed(const GraphDataset& ds, std::size_t n) {
  const auto result = pca_project(flatten_dataset(ds), n);
  EmbeddingMatrix m;
  m.graph_ids = ds.ids;
  for (Eigen::Index i = 0; i < result.projected.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(result.projected.cols()));
    for (Eigen::Index k = 0; k < result.projected.cols(); ++k) row[static_cast<std::size_t>(k)] = result.projected(i, k);
    m.vectors.push_back(std::move(row));
  }
  m.validate();
  return m;
}

}  // namespace s2vec
