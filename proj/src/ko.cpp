#include "grassgp/ko.hpp"

#include <cmath>
#include <string>

#include "grassgp/random.hpp"

namespace grassgp {

Eigen::Index KoConfig::steps() const {
  if (!(dt > 0.0) || !(t_final > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "t_final and dt must be positive");
  }
  const double ratio = t_final / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw Error(ErrorKind::InvalidArgument, "t_final / dt = " + std::to_string(ratio) + " is not an integer");
  }
  return static_cast<Eigen::Index>(rounded);
}

KoState ko_rhs(const KoState& s) { return {s.v1 * s.v3, -s.v2 * s.v3, -s.v1 * s.v1 + s.v2 * s.v2}; }

KoState ko_initial_state(double xi1, double xi2, const KoConfig& config) {
  return {config.v1_initial, 0.1 * xi1, xi2};
}

namespace {

KoState axpy(const KoState& y, double h, const KoState& k) {
  return {y.v1 + h * k.v1, y.v2 + h * k.v2, y.v3 + h * k.v3};
}

KoState rk4_step(const KoState& y, double dt) {
  const KoState k1 = ko_rhs(y);
  const KoState k2 = ko_rhs(axpy(y, 0.5 * dt, k1));
  const KoState k3 = ko_rhs(axpy(y, 0.5 * dt, k2));
  const KoState k4 = ko_rhs(axpy(y, dt, k3));
  const double w = dt / 6.0;
  return {y.v1 + w * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1),
          y.v2 + w * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2),
          y.v3 + w * (k1.v3 + 2.0 * k2.v3 + 2.0 * k3.v3 + k4.v3)};
}

void check_finite(const KoState& s, Eigen::Index step) {
  if (!std::isfinite(s.v1) || !std::isfinite(s.v2) || !std::isfinite(s.v3)) {
    throw Error(ErrorKind::NonFinite, "state blew up at step " + std::to_string(step));
  }
}

}  // namespace

Vector integrate_ko(double xi1, double xi2, const KoConfig& config) {
  const Eigen::Index n = config.steps();
  Vector v1(n);
  KoState y = ko_initial_state(xi1, xi2, config);
  for (Eigen::Index i = 0; i < n; ++i) {
    y = rk4_step(y, config.dt);
    check_finite(y, i);
    v1(i) = y.v1;
  }
  return v1;
}

KoState integrate_ko_final(double xi1, double xi2, const KoConfig& config) {
  const Eigen::Index n = config.steps();
  KoState y = ko_initial_state(xi1, xi2, config);
  for (Eigen::Index i = 0; i < n; ++i) {
    y = rk4_step(y, config.dt);
    check_finite(y, i);
  }
  return y;
}

KoDataset ko_dataset_at(const Matrix& params, const KoConfig& config, Shape shape) {
  if (params.cols() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "KO parameter points have 2 components");
  }
  const Eigen::Index n_dof = config.steps();
  if (shape.rows == 0 && shape.cols == 0) shape = closest_square_shape(n_dof);
  if (shape.rows * shape.cols != n_dof) {
    throw Error(ErrorKind::ShapeError, std::to_string(shape.rows) + "x" + std::to_string(shape.cols) +
                                           " does not hold " + std::to_string(n_dof) + " time steps");
  }
  KoDataset out{params, {}};
  out.snapshots.reserve(static_cast<std::size_t>(params.rows()));
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    out.snapshots.push_back(matricize(integrate_ko(params(i, 0), params(i, 1), config), shape.rows, shape.cols));
  }
  return out;
}

KoDataset sample_ko_dataset(int n_samples, std::uint64_t seed, const KoConfig& config, Shape shape) {
  if (n_samples < 0) throw Error(ErrorKind::InvalidArgument, "n_samples must be nonnegative");
  PortableRng rng(seed);
  Matrix params(n_samples, 2);
  for (int i = 0; i < n_samples; ++i) {
    params(i, 0) = rng.uniform(-1.0, 1.0);
    params(i, 1) = rng.uniform(-1.0, 1.0);
  }
  return ko_dataset_at(params, config, shape);
}

}  // namespace grassgp
