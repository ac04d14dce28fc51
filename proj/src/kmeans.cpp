#include <limits>
#include <string>

#include "grassgp/clustering.hpp"
#include "grassgp/random.hpp"

namespace grassgp {

namespace {

constexpr int kMaxLloydIterations = 300;

int nearest_center(const Matrix& rows, Eigen::Index i, const Matrix& centers, double* dist_sq) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (rows.row(i) - centers.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist_sq) *dist_sq = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& rows, int k, PortableRng& rng) {
  const auto n = rows.rows();
  Matrix centers(k, rows.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  centers.row(0) = rows.row(first);
  chosen[static_cast<std::size_t>(first)] = true;

  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (rows.row(i) - centers.row(0)).squaredNorm();

  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform_open() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (d2(i) > 0.0 && acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a center: take the lowest unused index.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
      if (pick < 0) pick = 0;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = rows.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (rows.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

KMeansResult lloyd(const Matrix& rows, Matrix centers) {
  const auto n = rows.rows();
  const auto k = centers.rows();
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_center(rows, i, centers, nullptr);
      if (c != labels[static_cast<std::size_t>(i)]) {
        labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, rows.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      sums.row(c) += rows.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  KMeansResult result;
  result.labels = std::move(labels);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d2 = 0.0;
    nearest_center(rows, i, centers, &d2);
    result.inertia += d2;
  }
  return result;
}

void renumber_by_first_appearance(std::vector<int>& labels) {
  std::vector<int> remap;
  int next = 0;
  for (int& l : labels) {
    if (static_cast<std::size_t>(l) >= remap.size()) remap.resize(static_cast<std::size_t>(l) + 1, -1);
    int& target = remap[static_cast<std::size_t>(l)];
    if (target < 0) target = next++;
    l = target;
  }
}

}  // namespace

KMeansResult kmeans(const Matrix& rows, int k, std::uint64_t seed, int restarts) {
  if (rows.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "k-means on an empty set");
  }
  if (k < 1 || k > rows.rows()) {
    throw Error(ErrorKind::InvalidArgument, "k = " + std::to_string(k) + " must lie in [1, " +
                                                std::to_string(rows.rows()) + "]");
  }
  if (restarts < 1) {
    throw Error(ErrorKind::InvalidArgument, "k-means needs at least one restart");
  }
  PortableRng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult trial = lloyd(rows, seed_plus_plus(rows, k, rng));
    if (trial.inertia < best.inertia) best = std::move(trial);
  }
  renumber_by_first_appearance(best.labels);
  return best;
}

}  // namespace grassgp
