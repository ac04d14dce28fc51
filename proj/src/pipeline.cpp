#include "grassgp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace grassgp {

Matrix matricize(const Vector& solution, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1 || rows * cols != solution.size()) {
    throw Error(ErrorKind::ShapeError, "cannot reshape " + std::to_string(solution.size()) + " values into " +
                                           std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(solution.data(), rows, cols);
}

Vector flatten(const Matrix& snapshot) { return Eigen::Map<const Vector>(snapshot.data(), snapshot.size()); }

Shape closest_square_shape(Eigen::Index n_dof) {
  if (n_dof < 1) throw Error(ErrorKind::ShapeError, "n_dof must be positive");
  auto cols = static_cast<Eigen::Index>(std::sqrt(static_cast<double>(n_dof)));
  while (cols * cols > n_dof) --cols;
  while ((cols + 1) * (cols + 1) <= n_dof) ++cols;
  while (n_dof % cols != 0) --cols;
  return {n_dof / cols, cols};
}

namespace {

Error with_context(const Error& e, const std::string& context) { return Error(e.kind(), context + ": " + e.detail()); }

/// Flattened (column-major) tangent matrices, one sample per row.
Matrix stack_rows(const std::vector<Matrix>& items, const std::vector<int>& pick) {
  const auto width = items.front().size();
  Matrix out(static_cast<Eigen::Index>(pick.size()), width);
  for (std::size_t r = 0; r < pick.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = flatten(items[static_cast<std::size_t>(pick[r])]).transpose();
  }
  return out;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& pick) {
  Matrix out(static_cast<Eigen::Index>(pick.size()), m.cols());
  for (std::size_t r = 0; r < pick.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(pick[r]);
  return out;
}

/// DBSCAN sublabels for one cluster's parameter points with noise folded into
/// the nearest labelled point. Returns all zeros when sub-clustering does not apply.
std::vector<int> subcluster(const Matrix& params, const SurrogateConfig& config) {
  const auto n = params.rows();
  std::vector<int> zeros(static_cast<std::size_t>(n), 0);
  if (config.subcluster == SubclusterMode::Off || n < 2) return zeros;
  const double eps = config.dbscan_eps > 0.0 ? config.dbscan_eps : default_dbscan_eps(params);
  if (!(eps > 0.0)) return zeros;
  std::vector<int> labels = dbscan(params, eps, config.dbscan_min_pts);
  const int groups = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  const bool apply = config.subcluster == SubclusterMode::On ? groups >= 1 : groups >= 2;
  if (!apply) return zeros;

  const std::vector<int> raw = labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (raw[static_cast<std::size_t>(i)] != kNoise) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (raw[static_cast<std::size_t>(j)] == kNoise) continue;
      const double d = (params.row(i) - params.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(j)];
      }
    }
  }
  return labels;
}

GpModel fit_block(const Matrix& inputs, const Matrix& outputs, const GpOptions& options) {
  GpOptions o = options;
  if (inputs.rows() < 2) o.fixed_length_scale = true;
  return GpModel::fit(inputs, outputs, o);
}

ClusterModel build_cluster(const PreparedData& data, int id, const std::vector<int>& members,
                           const SurrogateConfig& config) {
  Eigen::Index p_h = 0;
  for (int i : members) p_h = std::max(p_h, data.reduced[static_cast<std::size_t>(i)].rank());

  std::vector<GrassmannPoint> us;
  std::vector<GrassmannPoint> vs;
  std::vector<Vector> sigmas;
  for (int i : members) {
    const ReducedSolution r = data.reduced[static_cast<std::size_t>(i)].equalized(p_h);
    us.push_back(r.u());
    vs.push_back(r.v());
    sigmas.push_back(r.sigma());
  }
  KarcherOptions karcher = config.clustering.karcher;
  if (karcher.start_index < 0) karcher.start_index = static_cast<int>(medoid_index(us, vs));
  GrassmannPoint mean_u = karcher_mean(us, karcher).mean;
  GrassmannPoint mean_v = karcher_mean(vs, karcher).mean;

  std::vector<Matrix> gamma_u;
  std::vector<Matrix> gamma_v;
  std::vector<Matrix> sigma_rows;
  for (std::size_t j = 0; j < members.size(); ++j) {
    gamma_u.push_back(log_map(mean_u, us[j]).matrix());
    gamma_v.push_back(log_map(mean_v, vs[j]).matrix());
    sigma_rows.push_back(sigmas[j]);
  }

  const Matrix member_params = select_rows(data.params, members);
  std::vector<int> sub = subcluster(member_params, config);
  const int n_sub = *std::max_element(sub.begin(), sub.end()) + 1;

  std::vector<GpBlock> blocks;
  for (int s = 0; s < n_sub; ++s) {
    std::vector<int> local;
    for (std::size_t j = 0; j < sub.size(); ++j) {
      if (sub[j] == s) local.push_back(static_cast<int>(j));
    }
    const Matrix inputs = select_rows(member_params, local);
    try {
      blocks.push_back({fit_block(inputs, stack_rows(gamma_u, local), config.gp),
                        fit_block(inputs, stack_rows(gamma_v, local), config.gp),
                        fit_block(inputs, stack_rows(sigma_rows, local), config.gp)});
    } catch (const Error& e) {
      throw with_context(e, "sublabel " + std::to_string(s));
    }
  }
  return {id, members, p_h, std::move(mean_u), std::move(mean_v), std::move(sub), std::move(blocks)};
}

}  // namespace

PreparedData prepare_training_data(const Matrix& params, std::span<const Matrix> snapshots,
                                   const RankPolicy& truncation) {
  if (static_cast<std::size_t>(params.rows()) != snapshots.size()) {
    throw Error(ErrorKind::ShapeMismatch, std::to_string(params.rows()) + " parameter points for " +
                                              std::to_string(snapshots.size()) + " snapshots");
  }
  if (snapshots.empty()) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (!params.allFinite()) throw Error(ErrorKind::NonFinite, "parameter points must be finite");
  const Shape shape{snapshots.front().rows(), snapshots.front().cols()};
  std::vector<ReducedSolution> reduced;
  reduced.reserve(snapshots.size());
  Eigen::Index max_rank = 0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i].rows() != shape.rows || snapshots[i].cols() != shape.cols) {
      throw Error(ErrorKind::ShapeMismatch, "snapshot " + std::to_string(i) + " has shape " +
                                                std::to_string(snapshots[i].rows()) + "x" +
                                                std::to_string(snapshots[i].cols()));
    }
    try {
      reduced.push_back(project_to_grassmann(snapshots[i], truncation));
    } catch (const Error& e) {
      throw with_context(e, "snapshot " + std::to_string(i));
    }
    max_rank = std::max(max_rank, reduced.back().rank());
  }
  // Equalization never needs columns beyond the largest rank in the set.
  for (auto& r : reduced) r = r.with_reserve(max_rank);

  std::vector<GrassmannPoint> points;
  points.reserve(reduced.size());
  for (const auto& r : reduced) points.push_back(r.u());
  SpectralEmbedding embedding(build_similarity(points));
  return {params, shape, std::move(reduced), std::move(embedding)};
}

SurrogateModel train_with_labels(const PreparedData& data, std::vector<int> labels, ClusterDiagnostics diagnostics,
                                 const SurrogateConfig& config) {
  if (labels.size() != data.reduced.size()) {
    throw Error(ErrorKind::ShapeMismatch, "label count does not match the training set");
  }
  const int n_c = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  const auto groups = group_by_label(labels, n_c);

  SurrogateModel model{data.shape, data.params, std::move(labels), {}, {}, config, std::move(diagnostics)};
  model.sublabels.assign(model.labels.size(), 0);
  for (int h = 0; h < n_c; ++h) {
    if (groups[static_cast<std::size_t>(h)].empty()) {
      throw Error(ErrorKind::EmptyCluster, "cluster " + std::to_string(h) + " has no members");
    }
    try {
      model.clusters.push_back(build_cluster(data, h, groups[static_cast<std::size_t>(h)], config));
    } catch (const Error& e) {
      throw with_context(e, "cluster " + std::to_string(h));
    }
    const auto& c = model.clusters.back();
    for (std::size_t j = 0; j < c.members.size(); ++j) {
      model.sublabels[static_cast<std::size_t>(c.members[j])] = c.member_sublabels[j];
    }
  }
  return model;
}

SurrogateModel train_surrogate(const PreparedData& data, const SurrogateConfig& config) {
  const auto n = data.reduced.size();
  const auto needed = static_cast<std::size_t>(config.clustering.n_min_points) *
                      static_cast<std::size_t>(config.clustering.n_start);
  if (n < needed) {
    throw Error(ErrorKind::InvalidArgument, "training set of " + std::to_string(n) + " is smaller than n_min_points * n_start = " +
                                                std::to_string(needed));
  }
  ClusterCountResult clustered =
      optimize_cluster_count(data.reduced, data.embedding, config.clustering, config.seed);
  return train_with_labels(data, std::move(clustered.labels), std::move(clustered.diagnostics), config);
}

SurrogateModel train_fixed_count(const PreparedData& data, int n_c, const SurrogateConfig& config) {
  ClusterCountResult clustered = cluster_fixed_count(data.reduced, data.embedding, n_c, config.clustering, config.seed);
  return train_with_labels(data, std::move(clustered.labels), std::move(clustered.diagnostics), config);
}

SurrogateModel train_surrogate(const Matrix& params, std::span<const Matrix> snapshots,
                               const SurrogateConfig& config) {
  return train_surrogate(prepare_training_data(params, snapshots, config.truncation), config);
}

Assignment assign_cluster(const SurrogateModel& model, const Vector& x) {
  if (x.size() != model.train_params.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "parameter point has dimension " + std::to_string(x.size()) +
                                                  ", model expects " + std::to_string(model.train_params.cols()));
  }
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < model.train_params.rows(); ++i) {
    const double d = (model.train_params.row(i).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const auto b = static_cast<std::size_t>(best);
  return {model.labels[b], model.sublabels[b], static_cast<int>(best)};
}

Prediction predict_solution_detailed(const SurrogateModel& model, const Vector& x) {
  Prediction out;
  out.assignment = assign_cluster(model, x);
  const ClusterModel& cluster = model.clusters[static_cast<std::size_t>(out.assignment.cluster)];
  const GpBlock& block = cluster.blocks[static_cast<std::size_t>(out.assignment.sublabel)];
  const Eigen::Index p = cluster.rank;

  const Vector gu = block.gamma_u.predict_mean(x);
  const Vector gv = block.gamma_v.predict_mean(x);
  out.sigma = block.sigma.predict_mean(x);
  if (!gu.allFinite() || !gv.allFinite() || !out.sigma.allFinite()) {
    throw Error(ErrorKind::SingularPrediction, "GP prediction produced non-finite values");
  }
  const TangentVector tu = TangentVector::project(cluster.mean_u, matricize(gu, model.shape.rows, p));
  const TangentVector tv = TangentVector::project(cluster.mean_v, matricize(gv, model.shape.cols, p));
  const GrassmannPoint u = exp_map(cluster.mean_u, tu);
  const GrassmannPoint v = exp_map(cluster.mean_v, tv);

  for (Eigen::Index i = 0; i < out.sigma.size(); ++i) {
    if (out.sigma(i) < 0.0) {
      out.sigma(i) = 0.0;
      out.sigma_clamped = true;
    }
    if (i > 0 && out.sigma(i) > out.sigma(i - 1)) out.sigma_order_violated = true;
  }
  out.field = u.basis() * out.sigma.asDiagonal() * v.basis().transpose();
  if (!out.field.allFinite()) {
    throw Error(ErrorKind::SingularPrediction, "reconstructed field is not finite");
  }
  return out;
}

Matrix predict_solution(const SurrogateModel& model, const Vector& x) {
  return predict_solution_detailed(model, x).field;
}

Evaluation evaluate(const SurrogateModel& model, const Matrix& test_params, std::span<const Matrix> test_snapshots) {
  if (static_cast<std::size_t>(test_params.rows()) != test_snapshots.size()) {
    throw Error(ErrorKind::ShapeError, std::to_string(test_params.rows()) + " test points for " +
                                           std::to_string(test_snapshots.size()) + " snapshots");
  }
  Evaluation out;
  double sum = 0.0;
  for (std::size_t i = 0; i < test_snapshots.size(); ++i) {
    const Matrix& truth = test_snapshots[i];
    if (truth.rows() != model.shape.rows || truth.cols() != model.shape.cols) {
      throw Error(ErrorKind::ShapeError, "test snapshot " + std::to_string(i) + " has shape " +
                                             std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
    }
    const double err =
        (truth - predict_solution(model, test_params.row(static_cast<Eigen::Index>(i)).transpose())).norm();
    out.per_point.push_back(err);
    sum += err;
  }
  if (!out.per_point.empty()) out.mean_error = sum / static_cast<double>(out.per_point.size());
  return out;
}

}  // namespace grassgp
