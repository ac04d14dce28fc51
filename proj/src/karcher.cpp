#include "grassgp/karcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace grassgp {

namespace {

/// Adds every squared pairwise distance to both endpoints' costs and returns the
/// largest pairwise distance.
double accumulate_costs(std::span<const GrassmannPoint> points, std::vector<double>& cost) {
  double max_pairwise = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = distance(points[i], points[j], DistanceMetric::Grassmann);
      cost[i] += d * d;
      cost[j] += d * d;
      max_pairwise = std::max(max_pairwise, d);
    }
  }
  return max_pairwise;
}

std::size_t argmin(const std::vector<double>& cost) {
  return static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
}

}  // namespace

KarcherResult karcher_mean(std::span<const GrassmannPoint> points, const KarcherOptions& options) {
  if (points.empty()) {
    throw Error(ErrorKind::InvalidArgument, "Karcher mean of an empty set");
  }
  if (!(options.tol > 0.0) || options.max_iter < 1 || !(options.step > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Karcher options need tol > 0, max_iter >= 1, step > 0");
  }
  const auto n = points.front().ambient_dim();
  const auto p = points.front().subspace_dim();
  for (const auto& x : points) {
    if (x.ambient_dim() != n || x.subspace_dim() != p) {
      throw Error(ErrorKind::ShapeMismatch, "Karcher mean needs all points on the same manifold");
    }
  }

  const std::size_t count = points.size();
  if (options.start_index >= static_cast<int>(count)) {
    throw Error(ErrorKind::InvalidArgument, "Karcher start index out of range");
  }
  std::vector<double> cost(count, 0.0);
  const double max_pairwise = accumulate_costs(points, cost);
  const std::size_t start =
      options.start_index >= 0 ? static_cast<std::size_t>(options.start_index) : argmin(cost);

  KarcherResult result{points[start], 0.0, 0, std::numeric_limits<double>::infinity(),
                       max_pairwise > std::numbers::pi / 2.0};
  const double inv_count = 1.0 / static_cast<double>(count);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    Matrix mean_tangent = Matrix::Zero(n, p);
    for (const auto& x : points) {
      mean_tangent += log_map(result.mean, x).matrix();
    }
    mean_tangent *= inv_count;
    result.iterations = iter;
    result.final_gradient_norm = mean_tangent.norm();
    if (result.final_gradient_norm < options.tol) {
      result.variance = karcher_variance(points, result.mean);
      return result;
    }
    result.mean = exp_map(result.mean, TangentVector::project(result.mean, options.step * mean_tangent));
  }
  result.variance = karcher_variance(points, result.mean);
  throw KarcherNoConvergence("gradient norm " + std::to_string(result.final_gradient_norm) + " after " +
                                 std::to_string(options.max_iter) + " iterations",
                             std::move(result));
}

std::size_t medoid_index(std::span<const GrassmannPoint> points, std::span<const GrassmannPoint> paired) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "medoid of an empty set");
  if (!paired.empty() && paired.size() != points.size()) {
    throw Error(ErrorKind::ShapeMismatch, "paired point lists differ in length");
  }
  const std::size_t count = points.size();
  std::vector<double> cost(points.size(), 0.0);
  accumulate_costs(points, cost);
  if (!paired.empty()) accumulate_costs(paired, cost);
  return argmin(cost);
}

double karcher_variance(std::span<const GrassmannPoint> points, const GrassmannPoint& mean,
                        DistanceMetric metric) {
  if (points.empty()) {
    throw Error(ErrorKind::InvalidArgument, "Karcher variance of an empty set");
  }
  double sum = 0.0;
  for (const auto& x : points) {
    const double d = distance(x, mean, metric);
    sum += d * d;
  }
  return sum / static_cast<double>(points.size());
}

}  // namespace grassgp
