#include <cmath>
#include <string>

#include "grassgp/clustering.hpp"

namespace grassgp {

SimilarityGraph SimilarityGraph::from_weights(Matrix weights) {
  if (weights.rows() != weights.cols() || weights.rows() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "similarity matrix must be square and non-empty");
  }
  if (!weights.allFinite()) {
    throw Error(ErrorKind::NonFinite, "similarity matrix has non-finite entries");
  }
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "similarity matrix is not symmetric");
  }
  if (weights.minCoeff() < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "similarity matrix has negative weights");
  }
  Vector degrees = weights.rowwise().sum();
  return {std::move(weights), std::move(degrees)};
}

SimilarityGraph build_similarity(std::span<const GrassmannPoint> points) {
  if (points.empty()) {
    throw Error(ErrorKind::InvalidArgument, "similarity of an empty set");
  }
  const auto n = points.front().ambient_dim();
  std::vector<Eigen::Index> offset(points.size() + 1, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].ambient_dim() != n) {
      throw Error(ErrorKind::AmbientMismatch, "point " + std::to_string(i) + " has ambient dimension " +
                                                  std::to_string(points[i].ambient_dim()) + ", expected " +
                                                  std::to_string(n));
    }
    offset[i + 1] = offset[i] + points[i].subspace_dim();
  }

  // All bases side by side so each row of W is a single matrix product.
  Matrix stacked(n, offset.back());
  for (std::size_t i = 0; i < points.size(); ++i) {
    stacked.middleCols(offset[i], points[i].subspace_dim()) = points[i].basis();
  }

  const auto count = static_cast<Eigen::Index>(points.size());
  Matrix w(count, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto from = offset[static_cast<std::size_t>(i)];
    const Matrix products = points[static_cast<std::size_t>(i)].basis().transpose() *
                            stacked.rightCols(stacked.cols() - from);
    for (Eigen::Index j = i; j < count; ++j) {
      const auto col = offset[static_cast<std::size_t>(j)] - from;
      const double kij = products.middleCols(col, points[static_cast<std::size_t>(j)].subspace_dim()).squaredNorm();
      w(i, j) = kij;
      w(j, i) = kij;
    }
  }
  return SimilarityGraph::from_weights(std::move(w));
}

Matrix normalized_laplacian(const SimilarityGraph& graph) {
  const auto n = graph.weights.rows();
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(graph.degrees(i) > 0.0)) {
      throw Error(ErrorKind::IsolatedVertex, "vertex " + std::to_string(i) + " has zero degree");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(graph.degrees(i));
  }
  Matrix l = -(inv_sqrt.asDiagonal() * graph.weights * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  // Exact symmetry regardless of rounding in the scaling.
  Matrix sym = 0.5 * (l + l.transpose());
  return sym;
}

SpectralEmbedding::SpectralEmbedding(const SimilarityGraph& graph) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(normalized_laplacian(graph));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence, "eigendecomposition of the graph Laplacian failed");
  }
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

Matrix SpectralEmbedding::embedding(int n_c) const {
  if (n_c < 1 || n_c > size()) {
    throw Error(ErrorKind::InvalidArgument, "cluster count " + std::to_string(n_c) + " outside [1, " +
                                                std::to_string(size()) + "]");
  }
  Matrix phi = eigenvectors_.leftCols(n_c);
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const double norm = phi.row(i).norm();
    if (norm > 0.0) phi.row(i) /= norm;
  }
  return phi;
}

std::vector<int> SpectralEmbedding::cluster(int n_c, std::uint64_t seed, int restarts) const {
  if (n_c < 2 || n_c > size()) {
    throw Error(ErrorKind::InvalidArgument, "cluster count " + std::to_string(n_c) + " outside [2, " +
                                                std::to_string(size()) + "]");
  }
  KMeansResult km = kmeans(embedding(n_c), n_c, seed, restarts);
  std::vector<int> used(static_cast<std::size_t>(n_c), 0);
  for (int l : km.labels) used[static_cast<std::size_t>(l)] = 1;
  for (int c = 0; c < n_c; ++c) {
    if (!used[static_cast<std::size_t>(c)]) {
      throw Error(ErrorKind::EmptyCluster, "k-means left cluster " + std::to_string(c) + " of " +
                                               std::to_string(n_c) + " empty");
    }
  }
  return km.labels;
}

std::vector<int> spectral_cluster(const SimilarityGraph& graph, int n_c, std::uint64_t seed) {
  return SpectralEmbedding(graph).cluster(n_c, seed);
}

}  // namespace grassgp
