#pragma once

#include <span>

#include "grassgp/manifold.hpp"

namespace grassgp {

struct KarcherOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  double step = 0.5;
  /// Index of the starting point; -1 picks the point with the smallest sum of
  /// squared distances to the others.
  int start_index = -1;
};

struct KarcherResult {
  GrassmannPoint mean;
  /// Mean squared Grassmann distance from the points to `mean`.
  double variance = 0.0;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  /// Set when the ensemble is wider than the injectivity radius (max pairwise
  /// geodesic distance above pi/2); the mean may then not be unique.
  bool non_unique = false;
};

class KarcherNoConvergence : public Error {
 public:
  KarcherNoConvergence(const std::string& message, KarcherResult partial)
      : Error(ErrorKind::NoConvergence, message), partial_(std::move(partial)) {}

  const KarcherResult& partial() const noexcept { return partial_; }

 private:
  KarcherResult partial_;
};

/// Sample Karcher mean by fixed-point iteration: average the log-mapped points
/// at the current estimate and move along `step` times that average.
///
/// The iteration starts from the input point with the smallest sum of squared
/// geodesic distances to the others, so the result does not depend on input
/// order. Throws KarcherNoConvergence when `max_iter` is exhausted.
KarcherResult karcher_mean(std::span<const GrassmannPoint> points, const KarcherOptions& options = {});

/// Index minimizing the summed squared Grassmann distances to all other points.
/// With a second list of the same length (paired points on another manifold)
/// the two sums are added, so both means can start from one sample.
std::size_t medoid_index(std::span<const GrassmannPoint> points, std::span<const GrassmannPoint> paired = {});

double karcher_variance(std::span<const GrassmannPoint> points, const GrassmannPoint& mean,
                        DistanceMetric metric = DistanceMetric::Grassmann);

}  // namespace grassgp
