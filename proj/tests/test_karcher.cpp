#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "grassgp/karcher.hpp"
#include "support.hpp"

using namespace grassgp;
using namespace grassgp::testing;

namespace {

/// Points scattered around a center by exp-mapping random tangent vectors of
/// norm up to `radius`.
std::vector<GrassmannPoint> ensemble(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, int count,
                                     double radius) {
  const GrassmannPoint center = random_point(rng, n, p);
  std::uniform_real_distribution<double> u(0.0, radius);
  std::vector<GrassmannPoint> pts;
  for (int i = 0; i < count; ++i) {
    const TangentVector t = TangentVector::project(center, gaussian(rng, n, p));
    const double r = u(rng);
    pts.push_back(exp_map(center, TangentVector(center, t.matrix() * (r / t.norm()))));
  }
  return pts;
}

double cost(const std::vector<GrassmannPoint>& pts, const GrassmannPoint& at) { return karcher_variance(pts, at); }

}  // namespace

TEST(KarcherMean, SinglePoint) {
  std::mt19937_64 rng(1);
  const std::vector<GrassmannPoint> pts{random_point(rng, 7, 2)};
  const KarcherResult r = karcher_mean(pts);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR(r.variance, 0.0, 1e-28);
  EXPECT_LT(projection_distance_oracle(r.mean.basis(), pts[0].basis()), 1e-14);
}

TEST(KarcherMean, ThreeCopies) {
  std::mt19937_64 rng(2);
  const GrassmannPoint x = random_point(rng, 9, 3);
  const std::vector<GrassmannPoint> pts{x, x, x};
  const KarcherResult r = karcher_mean(pts);
  EXPECT_NEAR(r.variance, 0.0, 1e-24);
  EXPECT_LT(projection_distance_oracle(r.mean.basis(), x.basis()), 1e-12);
}

TEST(KarcherMean, TwoPointsGiveGeodesicMidpoint) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pair = pair_with_angles(rng, 12, uniform_angles(rng, 3, 1.0));
    const std::vector<GrassmannPoint> pts{GrassmannPoint(pair.x0), GrassmannPoint(pair.x1)};
    const KarcherResult r = karcher_mean(pts);
    const GrassmannPoint mid = geodesic(pts[0], pts[1], 0.5);
    EXPECT_LT(distance(r.mean, mid), 1e-6);
    // Independent check: the midpoint is at half the principal angles from each end.
    EXPECT_LT(std::abs(distance(r.mean, pts[0]) - pair.angles.norm() / 2.0), 1e-6);
  }
}

TEST(KarcherMean, GradientBelowToleranceOnSuccess) {
  std::mt19937_64 rng(4);
  const auto pts = ensemble(rng, 15, 3, 12, 0.4);
  const KarcherResult r = karcher_mean(pts);
  EXPECT_LT(r.final_gradient_norm, 1e-10);
  Matrix g = Matrix::Zero(15, 3);
  for (const auto& x : pts) g += log_map(r.mean, x).matrix();
  EXPECT_LT((g / 12.0).norm(), 1e-9);
  EXPECT_FALSE(r.non_unique);
}

TEST(KarcherMean, VarianceMatchesRecomputation) {
  std::mt19937_64 rng(5);
  const auto pts = ensemble(rng, 10, 2, 8, 0.5);
  const KarcherResult r = karcher_mean(pts);
  double sum = 0.0;
  for (const auto& x : pts) {
    const double d = principal_angles(x, r.mean).angles.norm();
    sum += d * d;
  }
  EXPECT_NEAR(r.variance, sum / 8.0, 1e-10);
}

TEST(KarcherMean, NoWorseThanAnySamplePoint) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = ensemble(rng, 12, 3, 10, 0.6);
    const KarcherResult r = karcher_mean(pts);
    for (const auto& x : pts) EXPECT_LE(r.variance, cost(pts, x) + 1e-8);
  }
}

TEST(KarcherMean, PermutationInvariant) {
  std::mt19937_64 rng(7);
  auto pts = ensemble(rng, 10, 2, 9, 0.5);
  const KarcherResult a = karcher_mean(pts);
  std::reverse(pts.begin(), pts.end());
  std::rotate(pts.begin(), pts.begin() + 4, pts.end());
  const KarcherResult b = karcher_mean(pts);
  EXPECT_LT(distance(a.mean, b.mean, DistanceMetric::Projection), 1e-6);
}

TEST(KarcherMean, NonUniqueFlagWhenSpreadExceedsQuarterTurn) {
  // Two planes in R^4 at principal angles (1.2, 1.2): Grassmann distance
  // 1.2 sqrt(2) > pi/2 while the overlap stays invertible.
  const Matrix x0 = unit_columns(4, {0, 1});
  Matrix x1(4, 2);
  const double t = 1.2;
  x1 << std::cos(t), 0, 0, std::cos(t), std::sin(t), 0, 0, std::sin(t);
  const std::vector<GrassmannPoint> pts{GrassmannPoint(x0), GrassmannPoint(x1)};
  const KarcherResult r = karcher_mean(pts);
  EXPECT_TRUE(r.non_unique);  // distance = 1.2 sqrt(2) > pi/2
  EXPECT_LT(distance(r.mean, geodesic(pts[0], pts[1], 0.5)), 1e-6);
}

TEST(KarcherMean, NoConvergenceCarriesDiagnostics) {
  std::mt19937_64 rng(8);
  const auto pts = ensemble(rng, 10, 2, 6, 0.8);
  KarcherOptions opts;
  opts.max_iter = 2;
  try {
    karcher_mean(pts, opts);
    FAIL() << "expected NoConvergence";
  } catch (const KarcherNoConvergence& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
    EXPECT_EQ(e.partial().iterations, 2);
    EXPECT_GT(e.partial().final_gradient_norm, 1e-10);
  }
}

TEST(KarcherMean, RejectsBadInput) {
  std::mt19937_64 rng(9);
  EXPECT_THROW(karcher_mean(std::vector<GrassmannPoint>{}), Error);
  const std::vector<GrassmannPoint> mixed{random_point(rng, 5, 2), random_point(rng, 5, 3)};
  EXPECT_THROW(karcher_mean(mixed), Error);
  const std::vector<GrassmannPoint> one{random_point(rng, 5, 2)};
  KarcherOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(karcher_mean(one, bad), Error);
}

TEST(KarcherVariance, SymmetricPairAboutMean) {
  std::mt19937_64 rng(10);
  const GrassmannPoint m = random_point(rng, 11, 3);
  const TangentVector t = TangentVector::project(m, gaussian(rng, 11, 3));
  const double theta = 0.3;
  const Matrix g = t.matrix() * (theta / t.norm());
  const std::vector<GrassmannPoint> pts{exp_map(m, TangentVector(m, g)), exp_map(m, TangentVector(m, -g))};
  EXPECT_NEAR(karcher_variance(pts, m), theta * theta, 1e-12);
  const std::vector<GrassmannPoint> same{m, m};
  EXPECT_NEAR(karcher_variance(same, m), 0.0, 1e-28);
}
