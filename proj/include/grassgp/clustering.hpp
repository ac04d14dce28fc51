#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "grassgp/karcher.hpp"
#include "grassgp/manifold.hpp"

namespace grassgp {

/// Weighted graph over snapshots: symmetric nonnegative weights and their row sums.
struct SimilarityGraph {
  Matrix weights;
  Vector degrees;

  /// Validates symmetry (1e-12) and nonnegativity, then fills the degrees.
  static SimilarityGraph from_weights(Matrix weights);
};

/// w_ij = projection_kernel(U_i, U_j). Subspace dimensions may differ.
SimilarityGraph build_similarity(std::span<const GrassmannPoint> points);

/// L_sym = I - D^{-1/2} W D^{-1/2}. Throws IsolatedVertex on a zero degree.
Matrix normalized_laplacian(const SimilarityGraph& graph);

struct KMeansResult {
  std::vector<int> labels;
  /// Within-cluster sum of squares of the retained restart.
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; keeps the restart with the lowest
/// inertia. Labels are renumbered in order of first appearance and distance
/// ties go to the lowest center index. `rows` holds one observation per row.
KMeansResult kmeans(const Matrix& rows, int k, std::uint64_t seed, int restarts = 10);

/// Eigendecomposition of L_sym, computed once and reused for any cluster count.
class SpectralEmbedding {
 public:
  explicit SpectralEmbedding(const SimilarityGraph& graph);

  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  Eigen::Index size() const noexcept { return eigenvectors_.rows(); }

  /// Rows of the n_c leading eigenvectors, each scaled to unit length.
  Matrix embedding(int n_c) const;

  /// Throws EmptyCluster if some label stays unused after all restarts.
  std::vector<int> cluster(int n_c, std::uint64_t seed, int restarts = 10) const;

 private:
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

std::vector<int> spectral_cluster(const SimilarityGraph& graph, int n_c, std::uint64_t seed);

struct ProjectionError {
  std::vector<double> alphas;
  double mean = 0.0;
};

/// Round-trip error of a cluster through the tangent spaces at its Karcher
/// means: alpha_j = ||U S V^T - U~ S V~^T||_F after equalizing ranks.
ProjectionError cluster_projection_error(std::span<const ReducedSolution> members,
                                         const KarcherOptions& karcher = {});

struct ClusterConfig {
  int n_min_points = 10;
  /// 0 selects N / n_min_points.
  int n_max_clusters = 0;
  double error_threshold = 1e-3;
  double pass_fraction = 0.9;
  int n_start = 2;
  int kmeans_restarts = 10;
  KarcherOptions karcher;

  void validate() const;
  int resolved_max_clusters(std::size_t n_points) const;
};

struct CandidateRecord {
  int n_c = 0;
  /// Rejected because some cluster had fewer than n_min_points members (or
  /// k-means left a cluster empty); no errors were computed.
  bool size_rejected = false;
  double pass_fraction = 0.0;
  int smallest_cluster = 0;
  /// Median epsilon^h; ranks candidates with equal pass fractions.
  double median_error = std::numeric_limits<double>::infinity();
};

struct ClusterDiagnostics {
  /// alpha_j per cluster, members in increasing snapshot index.
  std::vector<std::vector<double>> per_point_errors;
  /// epsilon^h per cluster; +inf when the tangent mapping itself failed.
  std::vector<double> per_cluster_mean_error;
  std::vector<int> cluster_sizes;
  int chosen_n_c = 0;
  double pass_fraction_achieved = 0.0;
  bool converged = false;
  std::vector<CandidateRecord> history;

  bool cluster_passes(std::size_t h, double threshold) const {
    return per_cluster_mean_error[h] <= threshold;
  }
};

struct ClusterCountResult {
  std::vector<int> labels;
  ClusterDiagnostics diagnostics;
};

/// Called after every candidate cluster count; returning false ends the search
/// as if the budget had run out.
using CandidateCallback = std::function<bool(const CandidateRecord&)>;

/// Grows n_c from n_start until the fraction of clusters with
/// epsilon^h <= error_threshold reaches pass_fraction. When the budget runs
/// out, returns the best candidate seen (highest pass fraction, then lowest
/// median epsilon^h, then smallest n_c) with `diagnostics.converged == false`.
ClusterCountResult optimize_cluster_count(std::span<const ReducedSolution> solutions,
                                          const ClusterConfig& config, std::uint64_t seed,
                                          const CandidateCallback& on_candidate = {});

/// Same loop on a precomputed embedding (lets callers sweep configurations).
ClusterCountResult optimize_cluster_count(std::span<const ReducedSolution> solutions,
                                          const SpectralEmbedding& embedding, const ClusterConfig& config,
                                          std::uint64_t seed, const CandidateCallback& on_candidate = {});

/// Projection errors of every cluster of a given partition; `converged`
/// reports whether the pass fraction is met.
ClusterDiagnostics diagnose_partition(std::span<const ReducedSolution> solutions, std::span<const int> labels,
                                      const ClusterConfig& config);

/// Spectral clustering at exactly n_c clusters, with diagnostics (no size check).
ClusterCountResult cluster_fixed_count(std::span<const ReducedSolution> solutions, const SpectralEmbedding& embedding,
                                       int n_c, const ClusterConfig& config, std::uint64_t seed);

/// Members of every cluster, in increasing index order.
std::vector<std::vector<int>> group_by_label(std::span<const int> labels, int n_clusters);

inline constexpr int kNoise = -1;

/// Classic DBSCAN under the Euclidean metric; rows of `points` are the samples.
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Clusters are numbered in discovery order; noise is kNoise.
std::vector<int> dbscan(const Matrix& points, double eps, int min_pts);

/// 3 x the median nearest-neighbour distance.
double default_dbscan_eps(const Matrix& points);

}  // namespace grassgp
