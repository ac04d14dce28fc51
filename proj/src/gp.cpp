#include "grassgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace grassgp {

namespace {

constexpr int kGridPoints = 41;  // log10 step 0.15 over [1e-3, 1e3]; hits l = 1 exactly
constexpr int kGoldenIterations = 60;
// Largest training residual, relative to the output scale, for which a
// factorization still counts as interpolating the data.
constexpr double kInterpolationTol = 1e-8;

void check_length_scale(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw Error(ErrorKind::NonpositiveLengthScale, "length-scale must be positive and finite, got " +
                                                       std::to_string(l));
  }
}

}  // namespace

double rbf_kernel(const Vector& x, const Vector& y, double length_scale) {
  check_length_scale(length_scale);
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "kernel arguments have lengths " + std::to_string(x.size()) +
                                                  " and " + std::to_string(y.size()));
  }
  return std::exp(-(x - y).squaredNorm() / (2.0 * length_scale * length_scale));
}

Matrix rbf_gram(const Matrix& inputs, double length_scale) {
  check_length_scale(length_scale);
  const auto n = inputs.rows();
  const double scale = 1.0 / (2.0 * length_scale * length_scale);
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-(inputs.row(i) - inputs.row(j)).squaredNorm() * scale);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

void GpOptions::validate() const {
  check_length_scale(l_init);
  check_length_scale(l_min);
  check_length_scale(l_max);
  if (!(l_min <= l_init && l_init <= l_max)) {
    throw Error(ErrorKind::InvalidArgument, "l_init must lie inside [l_min, l_max]");
  }
  if (!(nugget > 0.0) || !(max_nugget >= nugget)) {
    throw Error(ErrorKind::InvalidArgument, "need 0 < nugget <= max_nugget");
  }
}

void GpModel::prepare_inputs() {
  const auto n = inputs_.rows();
  const auto d = inputs_.cols();
  input_shift_ = Vector::Zero(d);
  input_scale_ = Vector::Ones(d);
  if (standardize_ && n > 1) {
    input_shift_ = inputs_.colwise().mean().transpose();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt((inputs_.col(c).array() - input_shift_(c)).square().sum() / static_cast<double>(n));
      if (sd > 0.0) input_scale_(c) = sd;
    }
  }
  scaled_inputs_ = (inputs_.rowwise() - input_shift_.transpose()).array().rowwise() / input_scale_.transpose().array();
  centers_ = outputs_.colwise().mean().transpose();
  centered_ = outputs_.rowwise() - centers_.transpose();
}

double GpModel::log_likelihood(double length_scale) const {
  return likelihood_up_to(length_scale, max_nugget_, false);
}

double GpModel::likelihood_up_to(double length_scale, double nugget_cap, bool require_interpolation) const {
  const Matrix k = rbf_gram(scaled_inputs_, length_scale);
  const auto n = k.rows();
  for (double nugget = nugget_; nugget <= nugget_cap * (1.0 + 1e-9); nugget *= 10.0) {
    Matrix kn = k;
    kn.diagonal().array() += nugget;
    Eigen::LLT<Matrix> llt(kn);
    if (llt.info() != Eigen::Success) continue;
    if (require_interpolation) {
      const double scale = std::max(1.0, centered_.cwiseAbs().maxCoeff());
      if ((k * llt.solve(centered_) - centered_).cwiseAbs().maxCoeff() > kInterpolationTol * scale) continue;
    }
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Matrix whitened = llt.matrixL().solve(centered_);
    double total = 0.0;
    int used = 0;
    for (Eigen::Index c = 0; c < centered_.cols(); ++c) {
      const double raw = outputs_.col(c).cwiseAbs().maxCoeff();
      if (centered_.col(c).norm() <= 1e-12 * std::max(1.0, raw) * std::sqrt(static_cast<double>(n))) continue;
      const double quad = whitened.col(c).squaredNorm();
      if (!(quad > 0.0)) continue;
      total += -0.5 * static_cast<double>(n) * std::log(quad / static_cast<double>(n)) - 0.5 * log_det;
      ++used;
    }
    if (used == 0) return 0.0;
    return total;
  }
  return -std::numeric_limits<double>::infinity();
}

void GpModel::factorize(double length_scale, double nugget) {
  check_length_scale(length_scale);
  length_scale_ = length_scale;
  nugget_ = nugget;
  Matrix k = rbf_gram(scaled_inputs_, length_scale);
  k.diagonal().array() += nugget;
  llt_.compute(k);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorKind::IllConditioned, "Cholesky failed at length-scale " + std::to_string(length_scale) +
                                               " with nugget " + std::to_string(nugget));
  }
  weights_ = llt_.solve(centered_);
}

GpModel GpModel::fit(Matrix inputs, Matrix outputs, const GpOptions& options) {
  options.validate();
  if (inputs.rows() != outputs.rows()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(inputs.rows()) + " inputs for " +
                                                  std::to_string(outputs.rows()) + " outputs");
  }
  if (inputs.rows() < 1 || inputs.cols() < 1) {
    throw Error(ErrorKind::InvalidArgument, "GP needs at least one training point of positive dimension");
  }
  if (!inputs.allFinite() || !outputs.allFinite()) {
    throw Error(ErrorKind::NonFinite, "GP training data has non-finite entries");
  }
  GpModel m;
  m.inputs_ = std::move(inputs);
  m.outputs_ = std::move(outputs);
  m.standardize_ = options.standardize_inputs;
  m.nugget_ = options.nugget;
  m.max_nugget_ = options.max_nugget;
  m.prepare_inputs();

  double best_l = options.l_init;
  if (!options.fixed_length_scale && m.inputs_.rows() >= 2) {
    // Coarse log grid (always containing l_init), then golden section around the best node.
    const double lo = std::log(options.l_min);
    const double hi = std::log(options.l_max);
    std::vector<double> grid;
    for (int i = 0; i < kGridPoints; ++i) grid.push_back(lo + (hi - lo) * i / (kGridPoints - 1));
    grid.push_back(std::log(options.l_init));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    // Length-scales that need an inflated nugget, or whose factorization is too
    // inaccurate to reproduce the data, smooth instead of interpolating; they
    // compete only when nothing else works.
    double cap = m.nugget_;
    bool interpolate = true;
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 2 && !std::isfinite(best_value); ++pass) {
      if (pass == 1) {
        cap = m.max_nugget_;
        interpolate = false;
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = m.likelihood_up_to(std::exp(grid[i]), cap, interpolate);
        if (v > best_value) {
          best_value = v;
          best = i;
        }
      }
    }
    if (!std::isfinite(best_value)) {
      throw Error(ErrorKind::IllConditioned, "no length-scale in the search range gives a factorable Gram matrix");
    }
    const auto objective = [&](double log_l) { return m.likelihood_up_to(std::exp(log_l), cap, interpolate); };
    double a = grid[best > 0 ? best - 1 : 0];
    double b = grid[std::min(best + 1, grid.size() - 1)];
    double best_log = grid[best];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    for (int it = 0; it < kGoldenIterations; ++it) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = objective(d);
      }
    }
    const double mid = 0.5 * (a + b);
    const double f_mid = objective(mid);
    if (f_mid > best_value) best_log = mid;
    best_l = std::exp(best_log);
  }

  for (double nugget = options.nugget;; nugget *= 10.0) {
    try {
      m.factorize(best_l, nugget);
      return m;
    } catch (const Error&) {
      if (nugget * 10.0 > options.max_nugget * (1.0 + 1e-9)) throw;
    }
  }
}

GpModel GpModel::from_state(Matrix inputs, Matrix outputs, double length_scale, double nugget,
                            bool standardize_inputs) {
  if (inputs.rows() != outputs.rows() || inputs.rows() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "stored GP state has inconsistent sizes");
  }
  GpModel m;
  m.inputs_ = std::move(inputs);
  m.outputs_ = std::move(outputs);
  m.standardize_ = standardize_inputs;
  m.prepare_inputs();
  m.factorize(length_scale, nugget);
  return m;
}

Vector GpModel::kernel_column(const Vector& x) const {
  if (x.size() != inputs_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(x.size()) +
                                                  ", model expects " + std::to_string(inputs_.cols()));
  }
  const Vector xs = (x - input_shift_).cwiseQuotient(input_scale_);
  const double scale = 1.0 / (2.0 * length_scale_ * length_scale_);
  Vector k(inputs_.rows());
  for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
    k(i) = std::exp(-(scaled_inputs_.row(i).transpose() - xs).squaredNorm() * scale);
  }
  return k;
}

Vector GpModel::predict_mean(const Vector& x) const {
  return weights_.transpose() * kernel_column(x) + centers_;
}

double GpModel::predict_variance(const Vector& x) const {
  const Vector v = llt_.matrixL().solve(kernel_column(x));
  return std::max(0.0, 1.0 - v.squaredNorm());
}

GpPrediction GpModel::predict(const Vector& x, Eigen::Index column) const {
  if (column < 0 || column >= outputs_.cols()) {
    throw Error(ErrorKind::InvalidArgument, "output column " + std::to_string(column) + " out of range");
  }
  const Vector k = kernel_column(x);
  GpPrediction p;
  p.mean = weights_.col(column).dot(k) + centers_(column);
  const Vector v = llt_.matrixL().solve(k);
  p.variance = std::max(0.0, 1.0 - v.squaredNorm());
  return p;
}

GpModel gp_fit(const Matrix& inputs, const Vector& outputs, double l_init, double nugget) {
  GpOptions options;
  options.l_init = l_init;
  options.nugget = nugget;
  return GpModel::fit(inputs, outputs, options);
}

GpPrediction gp_predict(const GpModel& model, const Vector& x) { return model.predict(x, 0); }

}  // namespace grassgp
