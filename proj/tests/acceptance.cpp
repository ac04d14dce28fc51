// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Pass criterion numbers as arguments
// to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grassgp/gp.hpp"
#include "grassgp/io.hpp"
#include "grassgp/karcher.hpp"
#include "grassgp/ko.hpp"
#include "grassgp/pipeline.hpp"
#include "support.hpp"

using namespace grassgp;
using namespace grassgp::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The KO V-factors are spread widely, so their Karcher means need far more
// fixed-step iterations than the library default.
constexpr int kKoKarcherIter = 20000;

SurrogateConfig ko_config() {
  SurrogateConfig c;
  c.clustering.error_threshold = 1e-3;
  c.clustering.pass_fraction = 0.95;
  c.clustering.karcher.max_iter = kKoKarcherIter;
  return c;
}

/// Principal angles from the cosines and sines of one SVD pair, avoiding the
/// accuracy loss of acos near zero.
Vector oracle_angles(const Matrix& x, const Matrix& y) {
  Eigen::JacobiSVD<Matrix> c(x.transpose() * y);
  Eigen::JacobiSVD<Matrix> s(y - x * (x.transpose() * y));
  const Eigen::Index p = x.cols();
  Vector out(p);
  for (Eigen::Index i = 0; i < p; ++i) out(i) = std::atan2(s.singularValues()(p - 1 - i), c.singularValues()(i));
  std::sort(out.data(), out.data() + p);
  return out;
}

/// Fraction of points whose labels agree under the best label bijection.
double partition_agreement(const std::vector<int>& a, const std::vector<int>& b, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += perm[static_cast<std::size_t>(a[i])] == b[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------

Outcome geometry_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto pair = pair_with_angles(rng, 20, uniform_angles(rng, 4, 0.999 * std::numbers::pi / 4.0));
    const GrassmannPoint x0(pair.x0);
    const GrassmannPoint x1(pair.x1);
    const GrassmannPoint back = exp_map(x0, log_map(x0, x1));
    worst = std::max(worst, projection_distance_oracle(back.basis(), pair.x1));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-8 && t < 5.0, fmt("max projection distance %.2e, %.2fs", worst, t)};
}

Outcome geodesic_endpoints() {
  std::mt19937_64 rng(102);
  double end_err = 0.0;
  double half_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector theta = uniform_angles(rng, 4, 1.2);
    const auto pair = pair_with_angles(rng, 20, theta);
    const GrassmannPoint x0(pair.x0);
    const GrassmannPoint x1(pair.x1);
    end_err = std::max(end_err, projection_distance_oracle(geodesic(x0, x1, 0.0).basis(), pair.x0));
    end_err = std::max(end_err, projection_distance_oracle(geodesic(x0, x1, 1.0).basis(), pair.x1));
    Vector expected = theta / 2.0;
    std::sort(expected.data(), expected.data() + expected.size());
    const Vector got = oracle_angles(pair.x0, geodesic(x0, x1, 0.5).basis());
    half_err = std::max(half_err, (got - expected).cwiseAbs().maxCoeff());
  }
  return {end_err < 1e-8 && half_err < 1e-8, fmt("endpoint error %.2e, half-angle error %.2e", end_err, half_err)};
}

Outcome metric_axioms() {
  std::mt19937_64 rng(103);
  const auto d = [](const GrassmannPoint& a, const GrassmannPoint& b) {
    return distance(a, b, DistanceMetric::Projection);
  };
  double sym = 0.0;
  double ident = 0.0;
  double tri = 0.0;
  double rot = 0.0;
  double oracle = 0.0;
  for (int i = 0; i < 500; ++i) {
    const GrassmannPoint a = random_point(rng, 12, 3);
    const GrassmannPoint b = random_point(rng, 12, 3);
    const GrassmannPoint c = random_point(rng, 12, 3);
    sym = std::max(sym, std::abs(d(a, b) - d(b, a)));
    ident = std::max(ident, d(a, a));
    tri = std::max(tri, d(a, c) - d(a, b) - d(b, c));
    const Matrix q = random_rotation(rng, 12);
    rot = std::max(rot, std::abs(d(GrassmannPoint(q * a.basis()), GrassmannPoint(q * b.basis())) - d(a, b)));
    oracle = std::max(oracle, std::abs(d(a, b) - projection_distance_oracle(a.basis(), b.basis())));
  }
  const double unequal =
      distance(GrassmannPoint(unit_columns(5, {0})), GrassmannPoint(unit_columns(5, {0, 1})), DistanceMetric::Grassmann);
  const bool pass = sym <= 1e-10 && ident <= 1e-10 && tri <= 1e-10 && rot <= 1e-9 && oracle <= 1e-10 &&
                    std::abs(unequal - std::numbers::pi / 2.0) <= 1e-12;
  return {pass, fmt("symmetry %.1e, identity %.1e, triangle excess %.1e, rotation %.1e, oracle %.1e, "
                    "d(e1, e1e2) - pi/2 = %.1e",
                    sym, ident, tri, rot, oracle, unequal - std::numbers::pi / 2.0)};
}

Outcome karcher_checks() {
  std::mt19937_64 rng(104);
  double mid_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto pair = pair_with_angles(rng, 12, uniform_angles(rng, 3, 1.0));
    const std::vector<GrassmannPoint> pts{GrassmannPoint(pair.x0), GrassmannPoint(pair.x1)};
    mid_err = std::max(mid_err, distance(karcher_mean(pts).mean, geodesic(pts[0], pts[1], 0.5)));
  }
  double grad = 0.0;
  int violations = 0;
  for (int e = 0; e < 50; ++e) {
    const GrassmannPoint center = random_point(rng, 12, 3);
    std::vector<GrassmannPoint> pts;
    for (int i = 0; i < 10; ++i) {
      const TangentVector t = TangentVector::project(center, gaussian(rng, 12, 3));
      pts.push_back(exp_map(center, TangentVector(center, t.matrix() * (0.5 / t.norm()))));
    }
    const KarcherResult r = karcher_mean(pts);
    grad = std::max(grad, r.final_gradient_norm);
    for (const auto& x : pts) violations += r.variance > karcher_variance(pts, x) + 1e-12;
  }
  return {mid_err < 1e-6 && grad < 1e-10 && violations == 0,
          fmt("midpoint error %.2e, max gradient %.2e, minimality violations %d/500", mid_err, grad, violations)};
}

Outcome gp_checks() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix x(40, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);

  // Paths drawn from the l = 0.4 prior through an eigendecomposition.
  const double truth = 0.4;
  Matrix k(40, 40);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 40; ++j) k(i, j) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2 * truth * truth));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Matrix y = root * gaussian(rng, 40, 6);
  const GpModel gp = GpModel::fit(x, y);

  double interp = 0.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < 40; ++i) {
    interp = std::max(interp, (gp.predict_mean(x.row(i).transpose()) - y.row(i).transpose()).cwiseAbs().maxCoeff());
    var = std::max(var, gp.predict_variance(x.row(i).transpose()));
  }
  const double ratio = gp.length_scale() / truth;

  GpOptions fixed;
  fixed.l_init = gp.length_scale();
  fixed.fixed_length_scale = true;
  const Matrix w1 = gaussian(rng, 40, 1);
  const Matrix w2 = gaussian(rng, 40, 1);
  const GpModel g1 = GpModel::fit(x, w1, fixed);
  const GpModel g2 = GpModel::fit(x, w2, fixed);
  const GpModel g12 = GpModel::fit(x, 2.5 * w1 - 0.7 * w2, fixed);
  double lin = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vector p(2);
    p << u(rng), u(rng);
    lin = std::max(lin, std::abs(g12.predict(p).mean - (2.5 * g1.predict(p).mean - 0.7 * g2.predict(p).mean)));
  }
  return {interp < 1e-6 && var < 1e-6 && ratio > 0.5 && ratio < 2.0 && lin < 1e-10,
          fmt("interpolation %.1e, variance %.1e, l / l_true = %.3f, linearity %.1e", interp, var, ratio, lin)};
}

Outcome spectral_blocks() {
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> jitter(0.0, 0.02);
  bool pass = true;
  std::string detail;
  double lo = 0.0;
  double hi = 0.0;
  for (const std::vector<int>& sizes : {std::vector<int>{40, 40}, std::vector<int>{10, 15, 25, 30}}) {
    std::vector<int> truth;
    for (std::size_t b = 0; b < sizes.size(); ++b) truth.insert(truth.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
    Matrix w(80, 80);
    for (Eigen::Index i = 0; i < 80; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const bool same = truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)];
        w(i, j) = w(j, i) = same ? 0.8 + jitter(rng) : jitter(rng) / 2.0;
      }
    }
    const SimilarityGraph g = SimilarityGraph::from_weights(w);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(normalized_laplacian(g));
    lo = std::min(lo, eig.eigenvalues().minCoeff());
    hi = std::max(hi, eig.eigenvalues().maxCoeff());
    const int k = static_cast<int>(sizes.size());
    const double agree = partition_agreement(spectral_cluster(g, k, 7), truth, k);
    pass = pass && agree == 1.0;
    detail += fmt("%d blocks: agreement %.3f; ", k, agree);
  }
  pass = pass && lo >= -1e-12 && hi <= 2.0 + 1e-12;
  return {pass, detail + fmt("L_sym spectrum in [%.2e, %.6f]", lo, hi)};
}

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  const SyntheticFamilies fam(107);
  const auto train = fam.sample(120, 1);
  const auto test = fam.sample(100, 2);
  SurrogateConfig config;
  config.seed = 3;
  const SurrogateModel m = train_surrogate(train.params, train.snapshots, config);
  double rel = 0.0;
  for (Eigen::Index i = 0; i < test.params.rows(); ++i) {
    const Matrix& truth = test.snapshots[static_cast<std::size_t>(i)];
    rel += (predict_solution(m, test.params.row(i).transpose()) - truth).norm() / truth.norm();
  }
  rel /= static_cast<double>(test.params.rows());
  const double t = seconds_since(t0);
  const int chosen = m.diagnostics.chosen_n_c;
  return {m.diagnostics.converged && chosen == 3 && rel < 1e-2 && t < 120.0,
          fmt("n_c = %d (converged %d), mean relative error %.2e, %.1fs", chosen, m.diagnostics.converged, rel, t)};
}

// KO data shared by the desk-scale criteria.
struct KoContext {
  std::optional<PreparedData> train;
  std::optional<KoDataset> test;
  int chosen_n_c = 32;
  std::optional<SurrogateModel> chosen_model;
  std::optional<Evaluation> chosen_eval;

  const PreparedData& data() {
    if (!train) {
      const KoDataset ds = sample_ko_dataset(1024, 1);
      train = prepare_training_data(ds.params, ds.snapshots, ko_config().truncation);
    }
    return *train;
  }
  const KoDataset& test_set() {
    if (!test) test = sample_ko_dataset(500, 2);
    return *test;
  }
};

KoContext ko;

Outcome ko_cluster_count() {
  const auto t0 = Clock::now();
  const double budget = 30.0 * 60.0;
  const PreparedData& data = ko.data();
  const SurrogateConfig config = ko_config();
  int last = 0;
  const auto stop = [&](const CandidateRecord& r) {
    last = r.n_c;
    std::printf("    n_c %3d  pass fraction %.3f  median eps %.3e%s  (%.0fs)\n", r.n_c, r.pass_fraction,
                r.median_error, r.size_rejected ? "  size rejected" : "", seconds_since(t0));
    std::fflush(stdout);
    return seconds_since(t0) < budget;
  };
  const ClusterCountResult r = optimize_cluster_count(data.reduced, data.embedding, config.clustering, config.seed, stop);
  const double t = seconds_since(t0);
  const auto& d = r.diagnostics;
  ko.chosen_n_c = d.chosen_n_c;
  const bool in_range = d.chosen_n_c >= 24 && d.chosen_n_c <= 40;
  return {d.converged && in_range && t < budget,
          fmt("chosen n_c = %d, converged %d, pass fraction %.3f, searched up to n_c = %d, %.0fs", d.chosen_n_c,
              d.converged, d.pass_fraction_achieved, last, t)};
}

Outcome ko_error_trend() {
  const PreparedData& data = ko.data();
  const KoDataset& test = ko.test_set();
  const SurrogateConfig config = ko_config();
  // The trend is over increasing n_c, whatever count the search returned.
  std::set<int> counts{5, 10, 20, ko.chosen_n_c};
  std::vector<double> errors;
  std::string detail;
  for (int n_c : counts) {
    SurrogateModel m = train_fixed_count(data, n_c, config);
    Evaluation ev = evaluate(m, test.params, test.snapshots);
    errors.push_back(ev.mean_error);
    detail += fmt("n_c %d: %.4e; ", n_c, ev.mean_error);
    if (n_c == ko.chosen_n_c) {
      ko.chosen_model = std::move(m);
      ko.chosen_eval = std::move(ev);
    }
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i) decreasing = decreasing && errors[i] < errors[i - 1];
  return {decreasing, detail + (decreasing ? "strictly decreasing" : "not strictly decreasing")};
}

Outcome shape_invariance() {
  const KoDataset base = sample_ko_dataset(200, 3);
  std::vector<std::vector<int>> partitions;
  for (const Shape s : {Shape{100, 100}, Shape{200, 50}, Shape{1000, 10}}) {
    std::vector<Matrix> snaps;
    for (const Matrix& f : base.snapshots) snaps.push_back(matricize(flatten(f), s.rows, s.cols));
    const PreparedData data = prepare_training_data(base.params, snaps, ko_config().truncation);
    partitions.push_back(data.embedding.cluster(5, 0));
  }
  const double a = partition_agreement(partitions[0], partitions[1], 5);
  const double b = partition_agreement(partitions[0], partitions[2], 5);
  return {a >= 0.95 && b >= 0.95, fmt("agreement 100x100 vs 200x50: %.3f, vs 1000x10: %.3f", a, b)};
}

Outcome subclustering_needed() {
  const PreparedData& data = ko.data();
  const KoDataset& test = ko.test_set();
  SurrogateConfig config = ko_config();
  if (!ko.chosen_model) {
    ko.chosen_model = train_fixed_count(data, ko.chosen_n_c, config);
    ko.chosen_eval = evaluate(*ko.chosen_model, test.params, test.snapshots);
  }
  std::size_t most = 0;
  int split = 0;
  for (const auto& c : ko.chosen_model->clusters) {
    most = std::max(most, c.blocks.size());
    split += c.blocks.size() >= 2;
  }
  config.subcluster = SubclusterMode::Off;
  const SurrogateModel off =
      train_with_labels(data, ko.chosen_model->labels, ko.chosen_model->diagnostics, config);
  const double e_on = ko.chosen_eval->mean_error;
  const double e_off = evaluate(off, test.params, test.snapshots).mean_error;
  return {most >= 2 && e_off > e_on,
          fmt("n_c = %d: %d clusters split (max %zu sublabels); mean error auto %.4e, off %.4e", ko.chosen_n_c, split,
              most, e_on, e_off)};
}

Outcome cost_ordering() {
  const KoDataset ds = sample_ko_dataset(256, 4);
  const SurrogateConfig config = ko_config();
  const auto t0 = Clock::now();
  const SurrogateModel m = train_surrogate(ds.params, ds.snapshots, config);
  const double t_clustered = seconds_since(t0);

  // One GP per entry of the flattened solution. Stops once it has provably
  // taken 3x longer than the clustered surrogate.
  Matrix flat(ds.params.rows(), 10000);
  for (Eigen::Index i = 0; i < flat.rows(); ++i) flat.row(i) = flatten(ds.snapshots[static_cast<std::size_t>(i)]).transpose();
  const auto t1 = Clock::now();
  Eigen::Index fitted = 0;
  for (; fitted < flat.cols() && seconds_since(t1) <= 3.0 * t_clustered; ++fitted) {
    const GpModel g = GpModel::fit(ds.params, flat.col(fitted));
    (void)g;
  }
  const double t_baseline = seconds_since(t1);
  const bool done = fitted == flat.cols();
  return {t_baseline >= 3.0 * t_clustered,
          fmt("clustered %.1fs (n_c = %d); per-component GPs %s%.1fs after %ld of %ld fits", t_clustered,
              m.diagnostics.chosen_n_c, done ? "" : ">= ", t_baseline, static_cast<long>(fitted),
              static_cast<long>(flat.cols()))};
}

std::string train_evaluate_report(const KoDataset& train, const KoDataset& test) {
  SurrogateConfig config = ko_config();
  config.seed = 11;
  const SurrogateModel m = train_surrogate(train.params, train.snapshots, config);
  const Evaluation ev = evaluate(m, test.params, test.snapshots);
  std::string out = diagnostics_csv(m);
  for (double e : ev.per_point) out += format_double(e) + '\n';
  return out;
}

Outcome determinism() {
  const KoDataset train = sample_ko_dataset(160, 5);
  const KoDataset test = sample_ko_dataset(40, 6);
  const std::string a = train_evaluate_report(train, test);
  const std::string b = train_evaluate_report(sample_ko_dataset(160, 5), sample_ko_dataset(40, 6));
  return {a == b, fmt("%zu-byte reports %s", a.size(), a == b ? "identical" : "differ")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "geometry round trip", geometry_round_trip},
      {2, "geodesic endpoints and angle scaling", geodesic_endpoints},
      {3, "metric axioms", metric_axioms},
      {4, "Karcher mean", karcher_checks},
      {5, "GP regression", gp_checks},
      {6, "spectral clustering", spectral_blocks},
      {7, "synthetic end-to-end", synthetic_end_to_end},
      {8, "KO cluster count", ko_cluster_count},
      {9, "KO error trend", ko_error_trend},
      {10, "matricization invariance", shape_invariance},
      {11, "sub-clustering necessity", subclustering_needed},
      {12, "cost ordering", cost_ordering},
      {13, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::printf("criterion %2d: running %s\n", c.id, c.name);
    std::fflush(stdout);
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s  [%s] (%.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
