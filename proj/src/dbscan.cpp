#include <algorithm>
#include <deque>
#include <limits>

#include "grassgp/clustering.hpp"

namespace grassgp {

namespace {

std::vector<Eigen::Index> region_query(const Matrix& points, Eigen::Index i, double eps_sq) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    if ((points.row(i) - points.row(j)).squaredNorm() <= eps_sq) out.push_back(j);
  }
  return out;
}

}  // namespace

std::vector<int> dbscan(const Matrix& points, double eps, int min_pts) {
  if (!(eps > 0.0) || min_pts < 1) {
    throw Error(ErrorKind::InvalidArgument, "DBSCAN needs eps > 0 and min_pts >= 1");
  }
  constexpr int kUnvisited = -2;
  const auto n = points.rows();
  const double eps_sq = eps * eps;
  std::vector<int> labels(static_cast<std::size_t>(n), kUnvisited);
  int next_cluster = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const auto seeds = region_query(points, i, eps_sq);
    if (static_cast<int>(seeds.size()) < min_pts) {
      labels[static_cast<std::size_t>(i)] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[static_cast<std::size_t>(i)] = cluster;
    std::deque<Eigen::Index> frontier(seeds.begin(), seeds.end());
    while (!frontier.empty()) {
      const Eigen::Index q = frontier.front();
      frontier.pop_front();
      int& lq = labels[static_cast<std::size_t>(q)];
      if (lq == kNoise) lq = cluster;  // border point
      if (lq != kUnvisited) continue;
      lq = cluster;
      const auto neighbours = region_query(points, q, eps_sq);
      if (static_cast<int>(neighbours.size()) >= min_pts) {
        frontier.insert(frontier.end(), neighbours.begin(), neighbours.end());
      }
    }
  }
  return labels;
}

double default_dbscan_eps(const Matrix& points) {
  const auto n = points.rows();
  if (n < 2) {
    throw Error(ErrorKind::InvalidArgument, "eps heuristic needs at least two points");
  }
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], (points.row(i) - points.row(j)).norm());
    }
  }
  std::sort(nearest.begin(), nearest.end());
  const std::size_t m = nearest.size();
  const double median = (m % 2 == 1) ? nearest[m / 2] : 0.5 * (nearest[m / 2 - 1] + nearest[m / 2]);
  return 3.0 * median;
}

}  // namespace grassgp
