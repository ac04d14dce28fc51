#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grassgp/clustering.hpp"

namespace grassgp {

std::vector<std::vector<int>> group_by_label(std::span<const int> labels, int n_clusters) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= n_clusters) {
      throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(l) + " at index " + std::to_string(i) +
                                                  " outside [0, " + std::to_string(n_clusters) + ")");
    }
    groups[static_cast<std::size_t>(l)].push_back(static_cast<int>(i));
  }
  return groups;
}

namespace {

/// Median with infinities allowed; an empty list counts as infinitely bad.
double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::infinity();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

ProjectionError cluster_projection_error(std::span<const ReducedSolution> members, const KarcherOptions& karcher) {
  if (members.empty()) {
    throw Error(ErrorKind::InvalidArgument, "projection error of an empty cluster");
  }
  Eigen::Index p_h = 0;
  for (const auto& m : members) p_h = std::max(p_h, m.rank());

  std::vector<ReducedSolution> equal;
  std::vector<GrassmannPoint> us;
  std::vector<GrassmannPoint> vs;
  equal.reserve(members.size());
  us.reserve(members.size());
  vs.reserve(members.size());
  for (const auto& m : members) {
    equal.push_back(m.equalized(p_h));
    us.push_back(equal.back().u());
    vs.push_back(equal.back().v());
  }
  // Both means start from the same member so their representatives stay paired
  // the way each member's U and V are.
  KarcherOptions paired = karcher;
  if (paired.start_index < 0) paired.start_index = static_cast<int>(medoid_index(us, vs));
  const GrassmannPoint mean_u = karcher_mean(us, paired).mean;
  const GrassmannPoint mean_v = karcher_mean(vs, paired).mean;

  ProjectionError out;
  out.alphas.reserve(members.size());
  for (std::size_t j = 0; j < equal.size(); ++j) {
    const Vector sigma = equal[j].sigma();
    const GrassmannPoint u_back = exp_map(mean_u, log_map(mean_u, us[j]));
    const GrassmannPoint v_back = exp_map(mean_v, log_map(mean_v, vs[j]));
    const Matrix original = us[j].basis() * sigma.asDiagonal() * vs[j].basis().transpose();
    const Matrix mapped = u_back.basis() * sigma.asDiagonal() * v_back.basis().transpose();
    out.alphas.push_back((original - mapped).norm());
  }
  double sum = 0.0;
  for (double a : out.alphas) sum += a;
  out.mean = sum / static_cast<double>(out.alphas.size());
  return out;
}

void ClusterConfig::validate() const {
  if (n_start < 2) throw Error(ErrorKind::InvalidArgument, "n_start must be at least 2");
  if (!(pass_fraction > 0.0 && pass_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "pass_fraction must lie in (0, 1]");
  }
  if (!(error_threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "error_threshold must be positive");
  if (n_min_points < 1) throw Error(ErrorKind::InvalidArgument, "n_min_points must be positive");
  if (n_max_clusters < 0) throw Error(ErrorKind::InvalidArgument, "n_max_clusters must be nonnegative");
  if (n_max_clusters > 0 && n_max_clusters < n_start) {
    throw Error(ErrorKind::InvalidArgument, "n_max_clusters is below n_start");
  }
  if (kmeans_restarts < 1) throw Error(ErrorKind::InvalidArgument, "kmeans_restarts must be positive");
}

int ClusterConfig::resolved_max_clusters(std::size_t n_points) const {
  const int n = static_cast<int>(n_points);
  const int wanted = n_max_clusters > 0 ? n_max_clusters : std::max(n_start, n / n_min_points);
  return std::min(wanted, n);
}

ClusterDiagnostics diagnose_partition(std::span<const ReducedSolution> solutions, std::span<const int> labels,
                                      const ClusterConfig& config) {
  if (labels.size() != solutions.size()) {
    throw Error(ErrorKind::ShapeMismatch, "label count does not match the number of solutions");
  }
  const int n_c = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  ClusterDiagnostics diag;
  diag.chosen_n_c = n_c;
  int passing = 0;
  for (const auto& g : group_by_label(labels, n_c)) {
    std::vector<ReducedSolution> members;
    members.reserve(g.size());
    for (int i : g) members.push_back(solutions[static_cast<std::size_t>(i)]);
    double eps = std::numeric_limits<double>::infinity();
    std::vector<double> alphas(g.size(), std::numeric_limits<double>::infinity());
    if (!members.empty()) {
      try {
        ProjectionError pe = cluster_projection_error(members, config.karcher);
        eps = pe.mean;
        alphas = std::move(pe.alphas);
      } catch (const Error& e) {
        // A cluster the tangent mapping cannot handle simply fails the criterion.
        if (e.kind() != ErrorKind::SingularOverlap && e.kind() != ErrorKind::NoConvergence) throw;
      }
    }
    if (eps <= config.error_threshold) ++passing;
    diag.per_point_errors.push_back(std::move(alphas));
    diag.per_cluster_mean_error.push_back(eps);
    diag.cluster_sizes.push_back(static_cast<int>(g.size()));
  }
  diag.pass_fraction_achieved = n_c > 0 ? static_cast<double>(passing) / static_cast<double>(n_c) : 0.0;
  diag.converged = diag.pass_fraction_achieved >= config.pass_fraction;
  return diag;
}

ClusterCountResult cluster_fixed_count(std::span<const ReducedSolution> solutions, const SpectralEmbedding& embedding,
                                       int n_c, const ClusterConfig& config, std::uint64_t seed) {
  std::vector<int> labels = embedding.cluster(n_c, seed, config.kmeans_restarts);
  ClusterDiagnostics diag = diagnose_partition(solutions, labels, config);
  CandidateRecord record;
  record.n_c = n_c;
  record.pass_fraction = diag.pass_fraction_achieved;
  record.smallest_cluster = *std::min_element(diag.cluster_sizes.begin(), diag.cluster_sizes.end());
  diag.history.push_back(record);
  return {std::move(labels), std::move(diag)};
}

ClusterCountResult optimize_cluster_count(std::span<const ReducedSolution> solutions, const ClusterConfig& config,
                                          std::uint64_t seed, const CandidateCallback& on_candidate) {
  std::vector<GrassmannPoint> points;
  points.reserve(solutions.size());
  for (const auto& s : solutions) points.push_back(s.u());
  return optimize_cluster_count(solutions, SpectralEmbedding(build_similarity(points)), config, seed, on_candidate);
}

ClusterCountResult optimize_cluster_count(std::span<const ReducedSolution> solutions,
                                          const SpectralEmbedding& embedding, const ClusterConfig& config,
                                          std::uint64_t seed, const CandidateCallback& on_candidate) {
  config.validate();
  if (static_cast<Eigen::Index>(solutions.size()) != embedding.size()) {
    throw Error(ErrorKind::ShapeMismatch, "embedding has " + std::to_string(embedding.size()) + " rows for " +
                                              std::to_string(solutions.size()) + " solutions");
  }
  const int n_max = config.resolved_max_clusters(solutions.size());
  if (config.n_start > n_max) {
    throw Error(ErrorKind::InvalidArgument, "n_start " + std::to_string(config.n_start) +
                                                " exceeds the number of solutions");
  }

  ClusterCountResult best;
  CandidateRecord best_record;
  bool have_best = false;
  std::vector<CandidateRecord> history;

  // Returns false when the caller asked to stop.
  auto report = [&](const CandidateRecord& record) {
    history.push_back(record);
    return !on_candidate || on_candidate(record);
  };

  for (int n_c = config.n_start; n_c <= n_max; ++n_c) {
    CandidateRecord record;
    record.n_c = n_c;
    std::vector<int> labels;
    try {
      labels = embedding.cluster(n_c, seed, config.kmeans_restarts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyCluster) throw;
      record.size_rejected = true;
      if (!report(record)) break;
      continue;
    }
    const auto groups = group_by_label(labels, n_c);
    record.smallest_cluster = static_cast<int>(groups.front().size());
    for (const auto& g : groups) record.smallest_cluster = std::min(record.smallest_cluster, static_cast<int>(g.size()));
    if (record.smallest_cluster < config.n_min_points) {
      record.size_rejected = true;
      if (!report(record)) break;
      continue;
    }

    ClusterDiagnostics diag = diagnose_partition(solutions, labels, config);
    record.pass_fraction = diag.pass_fraction_achieved;
    record.median_error = median(diag.per_cluster_mean_error);

    if (record.pass_fraction >= config.pass_fraction) {
      history.push_back(record);
      diag.converged = true;
      diag.history = std::move(history);
      return {std::move(labels), std::move(diag)};
    }
    const bool better = !have_best || record.pass_fraction > best_record.pass_fraction ||
                        (record.pass_fraction == best_record.pass_fraction &&
                         record.median_error < best_record.median_error);
    if (better) {
      best = {std::move(labels), std::move(diag)};
      best_record = record;
      have_best = true;
    }
    if (!report(record)) break;
  }

  if (!have_best) {
    throw Error(ErrorKind::EmptyCluster, "every cluster count tried in [" + std::to_string(config.n_start) + ", " +
                                             std::to_string(n_max) + "] produced a cluster smaller than " +
                                             std::to_string(config.n_min_points) + " points");
  }
  best.diagnostics.converged = false;
  best.diagnostics.history = std::move(history);
  return best;
}

}  // namespace grassgp
