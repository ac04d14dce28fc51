#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

#include "grassgp/error.hpp"

namespace grassgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A point on the Grassmann manifold G(p, n), stored as an n x p matrix with
/// orthonormal columns. Any orthonormal basis of the same span represents the
/// same point; the concrete basis still matters for tangent-space arithmetic.
class GrassmannPoint {
 public:
  /// Checks orthonormality to within `tol` and throws NotOrthonormal otherwise.
  explicit GrassmannPoint(Matrix basis, double tol = 1e-10);

  /// Orthonormalizes an arbitrary full-column-rank matrix with a thin QR whose
  /// triangular factor has a positive diagonal, so an already orthonormal input
  /// comes back unchanged up to rounding.
  static GrassmannPoint orthonormalize(const Matrix& m);

  const Matrix& basis() const noexcept { return basis_; }
  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index subspace_dim() const noexcept { return basis_.cols(); }

  /// Representative of the same point with basis `basis * r` (r orthogonal).
  GrassmannPoint rotated(const Matrix& r) const;

 private:
  Matrix basis_;
};

/// A matrix Gamma with base^T Gamma = 0, attached to its point of tangency.
class TangentVector {
 public:
  /// Checks shape and tangency (|base^T m| < 1e-8 entrywise).
  TangentVector(GrassmannPoint base, Matrix m);

  /// Projects `m` onto the tangent space at `base` before wrapping it.
  static TangentVector project(GrassmannPoint base, const Matrix& m);

  static TangentVector zero(const GrassmannPoint& base);

  const Matrix& matrix() const noexcept { return matrix_; }
  const GrassmannPoint& base() const noexcept { return base_; }
  double norm() const { return matrix_.norm(); }

 private:
  TangentVector(GrassmannPoint base, Matrix m, bool checked);

  GrassmannPoint base_;
  Matrix matrix_;
};

/// Principal angles in nondecreasing order, min(p, k) of them.
struct PrincipalAngles {
  Vector angles;
  Eigen::Index dim_first = 0;
  Eigen::Index dim_second = 0;
};

enum class DistanceMetric { Grassmann, Procrustes, Projection };

struct FixedRank {
  Eigen::Index rank;
};
struct RelativeTolerance {
  double tol;
};
using RankPolicy = std::variant<FixedRank, RelativeTolerance>;

/// Thin SVD of one snapshot F = U diag(sigma) V^T truncated at `rank`.
///
/// The factorization keeps a reserve of further singular triplets beyond the
/// truncation rank so members of one cluster can later be re-truncated at a
/// common rank without going back to the raw snapshot.
class ReducedSolution {
 public:
  ReducedSolution(Matrix u_full, Vector sigma_full, Matrix v_full, Eigen::Index rank);

  Eigen::Index rank() const noexcept { return rank_; }
  Eigen::Index reserve() const noexcept { return sigma_full_.size(); }
  Eigen::Index rows() const noexcept { return u_full_.rows(); }
  Eigen::Index cols() const noexcept { return v_full_.rows(); }

  GrassmannPoint u() const { return GrassmannPoint(u_full_.leftCols(rank_), 1e-9); }
  GrassmannPoint v() const { return GrassmannPoint(v_full_.leftCols(rank_), 1e-9); }
  Vector sigma() const { return sigma_full_.head(rank_); }

  /// Re-truncates at `rank` >= rank(). Singular values past the original rank
  /// are padded with zeros; the basis columns come from the stored reserve.
  ReducedSolution equalized(Eigen::Index rank) const;

  /// Drops reserve columns past `width` (never below the rank).
  ReducedSolution with_reserve(Eigen::Index width) const;

  Matrix reconstruct() const;

 private:
  Matrix u_full_;
  Vector sigma_full_;
  Matrix v_full_;
  Eigen::Index rank_;
};

/// Absolute floor below which a snapshot is treated as identically zero.
inline constexpr double kZeroSingularFloor = 1e-14;
/// Condition number of X0^T X1 above which the log map is refused.
inline constexpr double kMaxOverlapCondition = 1e12;

/// Thin SVD with a sign convention: each left singular vector is flipped so its
/// largest-magnitude entry is positive (the paired right vector flips too).
ReducedSolution project_to_grassmann(const Matrix& f, const RankPolicy& policy);

TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target);

GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& gamma);

GrassmannPoint geodesic(const GrassmannPoint& x0, const GrassmannPoint& x1, double z);

PrincipalAngles principal_angles(const GrassmannPoint& x1, const GrassmannPoint& x2);

double distance(const GrassmannPoint& x1, const GrassmannPoint& x2,
                DistanceMetric metric = DistanceMetric::Grassmann);

/// Distance evaluated from precomputed principal angles of subspaces with
/// dimensions p and k.
double distance_from_angles(const Vector& angles, Eigen::Index p, Eigen::Index k,
                            DistanceMetric metric);

/// ||U_i^T U_j||_F^2.
double projection_kernel(const GrassmannPoint& ui, const GrassmannPoint& uj);

}  // namespace grassgp
