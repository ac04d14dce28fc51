#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grassgp/clustering.hpp"
#include "grassgp/gp.hpp"
#include "grassgp/manifold.hpp"

namespace grassgp {

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Column-major reshape of a solution vector into rows x cols.
Matrix matricize(const Vector& solution, Eigen::Index rows, Eigen::Index cols);

/// Inverse of matricize.
Vector flatten(const Matrix& snapshot);

/// The factor pair of n_dof closest to square, with rows >= cols.
Shape closest_square_shape(Eigen::Index n_dof);

enum class SubclusterMode { Auto, On, Off };

struct SurrogateConfig {
  ClusterConfig clustering;
  RankPolicy truncation = RelativeTolerance{1e-8};
  GpOptions gp;
  SubclusterMode subcluster = SubclusterMode::Auto;
  /// 0 selects 3 x the median nearest-neighbour distance within each cluster.
  double dbscan_eps = 0.0;
  int dbscan_min_pts = 5;
  std::uint64_t seed = 0;
};

/// GPs of one (sub)cluster: flattened Gamma_u, flattened Gamma_v and sigma.
struct GpBlock {
  GpModel gamma_u;
  GpModel gamma_v;
  GpModel sigma;
};

struct ClusterModel {
  int id = 0;
  std::vector<int> members;
  Eigen::Index rank = 0;
  GrassmannPoint mean_u;
  GrassmannPoint mean_v;
  /// Sublabel of every member, aligned with `members`; all zero without sub-clustering.
  std::vector<int> member_sublabels;
  std::vector<GpBlock> blocks;
};

struct SurrogateModel {
  Shape shape;
  Matrix train_params;
  std::vector<int> labels;
  std::vector<int> sublabels;
  std::vector<ClusterModel> clusters;
  SurrogateConfig config;
  ClusterDiagnostics diagnostics;
};

/// SVDs and the spectral embedding of a training set. Computing these once lets
/// several surrogates with different clustering settings share them.
struct PreparedData {
  Matrix params;
  Shape shape;
  std::vector<ReducedSolution> reduced;
  SpectralEmbedding embedding;
};

PreparedData prepare_training_data(const Matrix& params, std::span<const Matrix> snapshots,
                                   const RankPolicy& truncation);

SurrogateModel train_surrogate(const PreparedData& data, const SurrogateConfig& config);

SurrogateModel train_surrogate(const Matrix& params, std::span<const Matrix> snapshots,
                               const SurrogateConfig& config);

/// Builds the per-cluster models for a fixed labelling (skips the cluster-count search).
SurrogateModel train_with_labels(const PreparedData& data, std::vector<int> labels, ClusterDiagnostics diagnostics,
                                 const SurrogateConfig& config);

/// Surrogate at exactly n_c clusters (for sweeps over the cluster count).
SurrogateModel train_fixed_count(const PreparedData& data, int n_c, const SurrogateConfig& config);

struct Assignment {
  int cluster = 0;
  int sublabel = 0;
  int neighbour = 0;
};

/// Cluster and sublabel of the Euclidean nearest training point (lowest index on ties).
Assignment assign_cluster(const SurrogateModel& model, const Vector& x);

struct Prediction {
  Matrix field;
  Assignment assignment;
  Vector sigma;
  /// The predicted singular values were not nonincreasing (left as predicted).
  bool sigma_order_violated = false;
  /// Some predicted singular values were negative and clamped to zero.
  bool sigma_clamped = false;
};

Prediction predict_solution_detailed(const SurrogateModel& model, const Vector& x);

Matrix predict_solution(const SurrogateModel& model, const Vector& x);

struct Evaluation {
  double mean_error = 0.0;
  std::vector<double> per_point;
};

/// Frobenius error of every test prediction and their mean.
Evaluation evaluate(const SurrogateModel& model, const Matrix& test_params, std::span<const Matrix> test_snapshots);

}  // namespace grassgp
