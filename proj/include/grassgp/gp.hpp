#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "grassgp/error.hpp"

namespace grassgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// exp(-|x - y|^2 / (2 l^2)).
double rbf_kernel(const Vector& x, const Vector& y, double length_scale);

/// Gram matrix over the rows of `inputs`.
Matrix rbf_gram(const Matrix& inputs, double length_scale);

struct GpOptions {
  double l_init = 1.0;
  double l_min = 1e-3;
  double l_max = 1e3;
  /// Starting nugget; multiplied by 10 on each failed Cholesky up to max_nugget.
  double nugget = 1e-10;
  double max_nugget = 1e-4;
  /// Skip the likelihood search and use l_init as is.
  bool fixed_length_scale = false;
  /// Scale every input dimension to zero mean and unit variance before the kernel.
  bool standardize_inputs = false;

  void validate() const;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Noise-free GP regression with a unit-amplitude RBF kernel and zero prior mean
/// on centered outputs. Every column of `outputs` is an independent GP; all of
/// them share one length-scale and one Cholesky factor.
class GpModel {
 public:
  /// Inputs hold one parameter point per row, outputs one training sample per row.
  static GpModel fit(Matrix inputs, Matrix outputs, const GpOptions& options = {});

  /// Rebuilds a fitted model from stored state; the factorization is recomputed
  /// at exactly `nugget`.
  static GpModel from_state(Matrix inputs, Matrix outputs, double length_scale, double nugget,
                            bool standardize_inputs);

  Eigen::Index input_dim() const noexcept { return inputs_.cols(); }
  Eigen::Index output_count() const noexcept { return outputs_.cols(); }
  Eigen::Index sample_count() const noexcept { return inputs_.rows(); }
  const Matrix& inputs() const noexcept { return inputs_; }
  const Matrix& outputs() const noexcept { return outputs_; }
  const Vector& centers() const noexcept { return centers_; }
  double length_scale() const noexcept { return length_scale_; }
  double nugget() const noexcept { return nugget_; }
  bool standardize_inputs() const noexcept { return standardize_; }

  /// Posterior means of every output column at x.
  Vector predict_mean(const Vector& x) const;
  /// Posterior variance at x; identical for every column.
  double predict_variance(const Vector& x) const;
  GpPrediction predict(const Vector& x, Eigen::Index column = 0) const;

  /// Profiled log marginal likelihood of the stored data at `length_scale`
  /// (amplitude maximized out per column). -inf if no nugget makes K factorable.
  double log_likelihood(double length_scale) const;

 private:
  GpModel() = default;
  void prepare_inputs();
  double likelihood_up_to(double length_scale, double nugget_cap, bool require_interpolation) const;
  void factorize(double length_scale, double nugget);
  Vector kernel_column(const Vector& x) const;

  Matrix inputs_;
  Matrix outputs_;
  Vector centers_;
  Vector input_shift_;
  Vector input_scale_;
  Matrix scaled_inputs_;
  Matrix centered_;
  bool standardize_ = false;
  double length_scale_ = 1.0;
  double nugget_ = 0.0;
  double max_nugget_ = 1e-4;
  Eigen::LLT<Matrix> llt_;
  Matrix weights_;
};

/// Single-output fit: the length-scale maximizes the marginal likelihood over
/// [1e-3, 1e3] starting from l_init.
GpModel gp_fit(const Matrix& inputs, const Vector& outputs, double l_init = 1.0, double nugget = 1e-10);

GpPrediction gp_predict(const GpModel& model, const Vector& x);

}  // namespace grassgp
