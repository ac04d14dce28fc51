#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "grassgp/manifold.hpp"
#include "grassgp/pipeline.hpp"

namespace grassgp::testing {

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

/// Orthonormal basis from Householder QR of a Gaussian matrix (independent of
/// the library's own orthonormalization).
inline Matrix orthonormal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(rng, n, p));
  return qr.householderQ() * Matrix::Identity(n, p);
}

inline GrassmannPoint random_point(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  return GrassmannPoint(orthonormal(rng, n, p));
}

inline Matrix random_rotation(std::mt19937_64& rng, Eigen::Index p) { return orthonormal(rng, p, p); }

/// A pair of subspaces with prescribed principal angles: X1 = X0 cos(theta) +
/// Q sin(theta) with Q orthonormal and orthogonal to X0, then both bases are
/// rotated within their span so nothing is axis-aligned.
struct ConstructedPair {
  Matrix x0;
  Matrix x1;
  Vector angles;
};

inline ConstructedPair pair_with_angles(std::mt19937_64& rng, Eigen::Index n, const Vector& angles) {
  const auto p = angles.size();
  const Matrix frame = orthonormal(rng, n, 2 * p);
  const Matrix x0 = frame.leftCols(p);
  const Matrix q = frame.rightCols(p);
  Matrix x1 = x0 * angles.array().cos().matrix().asDiagonal();
  x1 += q * angles.array().sin().matrix().asDiagonal();
  return {x0 * random_rotation(rng, p), x1 * random_rotation(rng, p), angles};
}

inline Vector uniform_angles(std::mt19937_64& rng, Eigen::Index p, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Vector a(p);
  for (Eigen::Index i = 0; i < p; ++i) a(i) = u(rng);
  return a;
}

/// sin of principal angles computed from the projector difference, which is
/// independent of the library's angle routine: ||P0 - P1||_F^2 = 2 sum sin^2.
inline double projection_distance_oracle(const Matrix& a, const Matrix& b) {
  const Matrix pa = a * a.transpose();
  const Matrix pb = b * b.transpose();
  return (pa - pb).norm() / std::sqrt(2.0);
}

inline Matrix unit_columns(Eigen::Index n, std::initializer_list<Eigen::Index> idx) {
  Matrix m = Matrix::Zero(n, static_cast<Eigen::Index>(idx.size()));
  Eigen::Index c = 0;
  for (auto i : idx) m(i, c++) = 1.0;
  return m;
}

/// Three subspace families around distant base points, separated in xi_1 by
/// gaps so nearest-neighbour assignment never crosses a family. Inside a family
/// both factors move smoothly with xi, so every snapshot is known exactly.
struct SyntheticFamilies {
  Eigen::Index n_f = 40;
  Eigen::Index m_f = 30;
  Eigen::Index p = 2;
  double spread = 0.005;
  std::vector<Matrix> base_u;
  std::vector<Matrix> base_v;
  std::vector<Matrix> dir_u;  // two tangent directions per family, side by side
  std::vector<Matrix> dir_v;

  explicit SyntheticFamilies(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Matrix frame_u = orthonormal(rng, n_f, 3 * p);
    const Matrix frame_v = orthonormal(rng, m_f, 3 * p);
    for (int k = 0; k < 3; ++k) {
      base_u.push_back(frame_u.middleCols(k * p, p));
      base_v.push_back(frame_v.middleCols(k * p, p));
      dir_u.push_back(tangent_pair(rng, base_u.back()));
      dir_v.push_back(tangent_pair(rng, base_v.back()));
    }
  }

  /// Families occupy the xi_1 bands [-1, -0.6], [-0.2, 0.2] and [0.6, 1].
  static int family_of(double xi1) { return xi1 < -0.4 ? 0 : (xi1 < 0.4 ? 1 : 2); }

  Matrix snapshot(const Vector& xi) const {
    const int k = family_of(xi(0));
    const Matrix u = curve(base_u[static_cast<std::size_t>(k)], dir_u[static_cast<std::size_t>(k)], xi);
    const Matrix v = curve(base_v[static_cast<std::size_t>(k)], dir_v[static_cast<std::size_t>(k)], xi);
    Vector sigma(p);
    for (Eigen::Index i = 0; i < p; ++i) sigma(i) = (3.0 - static_cast<double>(i)) * (1.0 + 0.2 * xi(1));
    return u * sigma.asDiagonal() * v.transpose();
  }

  struct Data {
    Matrix params;
    std::vector<Matrix> snapshots;
  };

  Data sample(int count, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> band(-0.2, 0.2);
    std::uniform_int_distribution<int> pick(0, 2);
    Data d{Matrix(count, 2), {}};
    for (int i = 0; i < count; ++i) {
      d.params(i, 0) = 0.8 * (pick(rng) - 1) + band(rng);
      d.params(i, 1) = u(rng);
      d.snapshots.push_back(snapshot(d.params.row(i).transpose()));
    }
    return d;
  }

 private:
  Matrix tangent_pair(std::mt19937_64& rng, const Matrix& base) const {
    Matrix d = gaussian(rng, base.rows(), 2 * p);
    d -= base * (base.transpose() * d);
    return d / d.norm() * std::sqrt(2.0);
  }

  /// Orthonormal basis of base + spread (xi_1 D1 + xi_2 D2), via polar factor.
  Matrix curve(const Matrix& base, const Matrix& dirs, const Vector& xi) const {
    const Matrix m = base + spread * (xi(0) * dirs.leftCols(p) + xi(1) * dirs.rightCols(p));
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
  }
};

}  // namespace grassgp::testing
