#include "grassgp/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace grassgp {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_ambient(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorKind::AmbientMismatch, "ambient dimensions " + std::to_string(a.ambient_dim()) +
                                                " and " + std::to_string(b.ambient_dim()) + " differ");
  }
}

void require_same_manifold(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.subspace_dim() != b.subspace_dim()) {
    throw Error(ErrorKind::ShapeMismatch,
                "points live on different manifolds: " + shape_str(a.ambient_dim(), a.subspace_dim()) +
                    " vs " + shape_str(b.ambient_dim(), b.subspace_dim()));
  }
}

Vector elementwise(const Vector& v, double (*fn)(double)) {
  return v.unaryExpr([fn](double x) { return fn(x); });
}

// Thin SVD of an n x p tangent-like matrix; for n < p the decomposition is
// padded so U is n x p and V is p x p regardless.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

ThinSvd thin_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

// ---------------------------------------------------------------------------

GrassmannPoint::GrassmannPoint(Matrix basis, double tol) : basis_(std::move(basis)) {
  const auto n = basis_.rows();
  const auto p = basis_.cols();
  if (p < 1 || n < p) {
    throw Error(ErrorKind::ShapeMismatch, "basis must be n x p with 1 <= p <= n, got " + shape_str(n, p));
  }
  if (!basis_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "basis has non-finite entries");
  }
  const double defect =
      (basis_.transpose() * basis_ - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (defect > tol) {
    throw Error(ErrorKind::NotOrthonormal, "max |X^T X - I| = " + std::to_string(defect));
  }
}

GrassmannPoint GrassmannPoint::orthonormalize(const Matrix& m) {
  const auto n = m.rows();
  const auto p = m.cols();
  if (p < 1 || n < p) {
    throw Error(ErrorKind::ShapeMismatch, "cannot orthonormalize a " + shape_str(n, p) + " matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::NonFinite, "matrix has non-finite entries");
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  const Matrix& r = qr.matrixQR();
  const double scale = m.norm();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double rjj = r(j, j);
    if (std::abs(rjj) <= 1e-14 * std::max(scale, 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "matrix is column-rank deficient");
    }
    if (rjj < 0.0) q.col(j) = -q.col(j);
  }
  return GrassmannPoint(std::move(q), 1e-9);
}

GrassmannPoint GrassmannPoint::rotated(const Matrix& r) const {
  return GrassmannPoint(basis_ * r, 1e-9);
}

// ---------------------------------------------------------------------------

TangentVector::TangentVector(GrassmannPoint base, Matrix m, bool /*checked*/)
    : base_(std::move(base)), matrix_(std::move(m)) {}

TangentVector::TangentVector(GrassmannPoint base, Matrix m) : base_(std::move(base)), matrix_(std::move(m)) {
  if (matrix_.rows() != base_.ambient_dim() || matrix_.cols() != base_.subspace_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "tangent matrix " + shape_str(matrix_.rows(), matrix_.cols()) +
                                              " does not match base " +
                                              shape_str(base_.ambient_dim(), base_.subspace_dim()));
  }
  const double off = (base_.basis().transpose() * matrix_).cwiseAbs().maxCoeff();
  if (off >= 1e-8) {
    throw Error(ErrorKind::NotTangent, "max |X^T Gamma| = " + std::to_string(off));
  }
}

TangentVector TangentVector::project(GrassmannPoint base, const Matrix& m) {
  if (m.rows() != base.ambient_dim() || m.cols() != base.subspace_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "tangent matrix " + shape_str(m.rows(), m.cols()) +
                                              " does not match base " +
                                              shape_str(base.ambient_dim(), base.subspace_dim()));
  }
  const Matrix& x = base.basis();
  Matrix projected = m - x * (x.transpose() * m);
  return TangentVector(std::move(base), std::move(projected), true);
}

TangentVector TangentVector::zero(const GrassmannPoint& base) {
  return TangentVector(base, Matrix::Zero(base.ambient_dim(), base.subspace_dim()), true);
}

// ---------------------------------------------------------------------------

ReducedSolution::ReducedSolution(Matrix u_full, Vector sigma_full, Matrix v_full, Eigen::Index rank)
    : u_full_(std::move(u_full)), sigma_full_(std::move(sigma_full)), v_full_(std::move(v_full)), rank_(rank) {
  const auto width = sigma_full_.size();
  if (u_full_.cols() != width || v_full_.cols() != width) {
    throw Error(ErrorKind::ShapeMismatch, "factor widths disagree with singular value count");
  }
  if (rank_ < 1 || rank_ > width) {
    throw Error(ErrorKind::InvalidArgument, "rank " + std::to_string(rank_) + " outside [1, " +
                                                std::to_string(width) + "]");
  }
}

ReducedSolution ReducedSolution::equalized(Eigen::Index rank) const {
  if (rank < rank_ || rank > reserve()) {
    throw Error(ErrorKind::InvalidArgument, "cannot equalize rank " + std::to_string(rank_) + " to " +
                                                std::to_string(rank) + " with reserve " +
                                                std::to_string(reserve()));
  }
  Vector sigma = sigma_full_;
  sigma.segment(rank_, rank - rank_).setZero();
  return ReducedSolution(u_full_, std::move(sigma), v_full_, rank);
}

ReducedSolution ReducedSolution::with_reserve(Eigen::Index width) const {
  const auto w = std::clamp(width, rank_, reserve());
  return ReducedSolution(u_full_.leftCols(w), sigma_full_.head(w), v_full_.leftCols(w), rank_);
}

Matrix ReducedSolution::reconstruct() const {
  return u_full_.leftCols(rank_) * sigma_full_.head(rank_).asDiagonal() * v_full_.leftCols(rank_).transpose();
}

// ---------------------------------------------------------------------------

ReducedSolution project_to_grassmann(const Matrix& f, const RankPolicy& policy) {
  if (f.size() == 0) {
    throw Error(ErrorKind::ShapeError, "empty snapshot matrix");
  }
  if (!f.allFinite()) {
    throw Error(ErrorKind::NonFinite, "snapshot has non-finite entries");
  }
  const auto k = std::min(f.rows(), f.cols());
  if (const auto* fixed = std::get_if<FixedRank>(&policy)) {
    if (fixed->rank < 1 || fixed->rank > k) {
      throw Error(ErrorKind::InvalidArgument, "fixed rank " + std::to_string(fixed->rank) +
                                                  " outside [1, " + std::to_string(k) + "]");
    }
  }

  Eigen::BDCSVD<Matrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  Vector s = svd.singularValues();
  if (s(0) < kZeroSingularFloor) {
    throw Error(ErrorKind::ZeroMatrix, "all singular values below " + std::to_string(kZeroSingularFloor));
  }

  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }

  Eigen::Index rank = 0;
  if (const auto* fixed = std::get_if<FixedRank>(&policy)) {
    rank = fixed->rank;
  } else {
    const double tol = std::get<RelativeTolerance>(policy).tol;
    while (rank < k && s(rank) / s(0) > tol) ++rank;
    rank = std::max<Eigen::Index>(rank, 1);
  }
  return ReducedSolution(std::move(u), std::move(s), std::move(v), rank);
}

TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target) {
  require_same_manifold(base, target);
  const Matrix& x0 = base.basis();
  const Matrix& x1 = target.basis();

  const Matrix overlap = x0.transpose() * x1;
  Eigen::JacobiSVD<Matrix> overlap_svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& os = overlap_svd.singularValues();
  const double smin = os(os.size() - 1);
  if (!(smin > 0.0) || os(0) / smin > kMaxOverlapCondition) {
    throw Error(ErrorKind::SingularOverlap,
                "X0^T X1 is numerically singular (smallest singular value " + std::to_string(smin) + ")");
  }
  const Matrix overlap_inv =
      overlap_svd.matrixV() * os.cwiseInverse().asDiagonal() * overlap_svd.matrixU().transpose();

  const Matrix m = (x1 - x0 * overlap) * overlap_inv;
  const ThinSvd svd = thin_svd(m);
  const Vector theta = elementwise(svd.s, std::atan);
  return TangentVector::project(base, svd.u * theta.asDiagonal() * svd.v.transpose());
}

GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& gamma) {
  const Matrix& g = gamma.matrix();
  if (g.rows() != base.ambient_dim() || g.cols() != base.subspace_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "tangent vector " + shape_str(g.rows(), g.cols()) +
                                              " does not match base " +
                                              shape_str(base.ambient_dim(), base.subspace_dim()));
  }
  const Matrix& tb = gamma.base().basis();
  if (tb.rows() != base.ambient_dim() || tb.cols() != base.subspace_dim() ||
      (tb - base.basis()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::ShapeMismatch, "tangent vector is attached to a different base point");
  }
  if (!g.allFinite()) {
    throw Error(ErrorKind::NonFinite, "tangent vector has non-finite entries");
  }
  const ThinSvd svd = thin_svd(g);
  const Vector c = elementwise(svd.s, std::cos);
  const Vector s = elementwise(svd.s, std::sin);
  const Matrix y = (base.basis() * svd.v * c.asDiagonal() + svd.u * s.asDiagonal()) * svd.v.transpose();
  return GrassmannPoint::orthonormalize(y);
}

GrassmannPoint geodesic(const GrassmannPoint& x0, const GrassmannPoint& x1, double z) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "geodesic parameter must lie in [0, 1]");
  }
  const TangentVector gamma = log_map(x0, x1);
  return exp_map(x0, TangentVector::project(x0, z * gamma.matrix()));
}

PrincipalAngles principal_angles(const GrassmannPoint& x1, const GrassmannPoint& x2) {
  require_same_ambient(x1, x2);
  const bool first_smaller = x1.subspace_dim() <= x2.subspace_dim();
  const Matrix& small = first_smaller ? x1.basis() : x2.basis();
  const Matrix& large = first_smaller ? x2.basis() : x1.basis();
  const auto m = small.cols();

  // Cosines lose accuracy for small angles and sines for angles near pi/2, so
  // both are computed and each angle is taken from the better-conditioned one.
  const Matrix cross = small.transpose() * large;
  Eigen::JacobiSVD<Matrix> cos_svd(cross);
  const Vector cosines = cos_svd.singularValues().head(m);  // descending
  const Matrix residual = small - large * cross.transpose();
  Eigen::JacobiSVD<Matrix> sin_svd(residual);
  Vector sines = sin_svd.singularValues().head(m);  // descending
  sines.reverseInPlace();

  Vector angles(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(i), 0.0, 1.0);
    angles(i) = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.data(), angles.data() + m);
  return {angles, x1.subspace_dim(), x2.subspace_dim()};
}

double distance_from_angles(const Vector& angles, Eigen::Index p, Eigen::Index k, DistanceMetric metric) {
  const double extra = static_cast<double>(std::abs(k - p));
  const bool equal = (p == k);
  switch (metric) {
    case DistanceMetric::Grassmann: {
      const double quarter_pi_sq = std::numbers::pi * std::numbers::pi / 4.0;
      return std::sqrt(extra * quarter_pi_sq + angles.squaredNorm());
    }
    case DistanceMetric::Procrustes: {
      const double sum = (angles / 2.0).array().sin().square().sum();
      return equal ? 2.0 * std::sqrt(sum) : std::sqrt(extra + sum);
    }
    case DistanceMetric::Projection: {
      const double sum = angles.array().sin().square().sum();
      return std::sqrt(extra + sum);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown distance metric");
}

double distance(const GrassmannPoint& x1, const GrassmannPoint& x2, DistanceMetric metric) {
  const PrincipalAngles pa = principal_angles(x1, x2);
  return distance_from_angles(pa.angles, pa.dim_first, pa.dim_second, metric);
}

double projection_kernel(const GrassmannPoint& ui, const GrassmannPoint& uj) {
  require_same_ambient(ui, uj);
  return (ui.basis().transpose() * uj.basis()).squaredNorm();
}

}  // namespace grassgp
