#include "flowopt/gp.hpp"

#include <limits>
#include <numbers>
#include <sstream>

#include "box_lbfgs.hpp"
#include "flowopt/rng.hpp"

namespace flowopt::gp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Squared scaled distances between rows of a and rows of b.
Eigen::ArrayXXd scaled_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                               const Eigen::VectorXd& lengthscales) {
  Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(a.rows(), b.rows());
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const Eigen::ArrayXd ak = a.col(k).array() / lengthscales(k);
    const Eigen::ArrayXd bk = b.col(k).array() / lengthscales(k);
    r2 += (ak.replicate(1, b.rows()).rowwise() - bk.transpose()).square();
  }
  return r2;
}

Eigen::ArrayXXd correlation_from_sq_dist(const Eigen::ArrayXXd& r2, Smoothness nu) {
  const Eigen::ArrayXXd r = r2.sqrt();
  switch (nu) {
    case Smoothness::half: return (-r).exp();
    case Smoothness::three_halves: {
      const Eigen::ArrayXXd s = std::sqrt(3.0) * r;
      return (1.0 + s) * (-s).exp();
    }
    case Smoothness::five_halves: {
      const Eigen::ArrayXXd s = std::sqrt(5.0) * r;
      return (1.0 + s + s.square() / 3.0) * (-s).exp();
    }
  }
  return Eigen::ArrayXXd::Zero(r2.rows(), r2.cols());
}

// (dk/d log l_k) / (signal_var * (delta_k / l_k)^2), as a function of r.
Eigen::ArrayXXd lengthscale_factor(const Eigen::ArrayXXd& r2, Smoothness nu) {
  const Eigen::ArrayXXd r = r2.sqrt();
  switch (nu) {
    case Smoothness::half: return (r > 0).select((-r).exp() / r, 0.0);
    case Smoothness::three_halves: return 3.0 * (-std::sqrt(3.0) * r).exp();
    case Smoothness::five_halves: {
      const Eigen::ArrayXXd s = std::sqrt(5.0) * r;
      return (5.0 / 3.0) * (1.0 + s) * (-s).exp();
    }
  }
  return Eigen::ArrayXXd::Zero(r2.rows(), r2.cols());
}

Eigen::MatrixXd training_covariance(const KernelParams& p, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::MatrixXd k = kernel_matrix(x, x, p);
  k.diagonal().array() += p.noise_var;
  return k;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelParams& p) {
  require(a.cols() == p.dims() && b.cols() == p.dims(), ErrorKind::invalid_input,
          "kernel_matrix input dimension does not match lengthscales");
  return (p.signal_var * correlation_from_sq_dist(scaled_sq_dist(a, b, p.lengthscales), p.nu)).matrix();
}

Eigen::MatrixXd Scaling::normalize_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::RowVectorXd lo = lower.transpose();
  const Eigen::RowVectorXd inv_w = (upper - lower).cwiseInverse().transpose();
  return ((x.rowwise() - lo).array().rowwise() * inv_w.array()).matrix();
}

GPModel::GPModel(KernelParams params, Scaling scaling, Eigen::MatrixXd x_train, Eigen::VectorXd y_train)
    : params_(std::move(params)),
      scaling_(std::move(scaling)),
      x_train_(std::move(x_train)),
      y_train_(std::move(y_train)) {
  require(x_train_.rows() == y_train_.size() && x_train_.rows() >= 1, ErrorKind::invalid_input,
          "training inputs and outputs must have matching non-zero length");
  require(x_train_.cols() == params_.dims(), ErrorKind::invalid_input, "lengthscales must match input dimension");
  const Eigen::LLT<Eigen::MatrixXd> llt(training_covariance(params_, x_train_));
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "covariance not positive definite (n = " << x_train_.rows() << ", signal_var = " << params_.signal_var
        << ", noise_var = " << params_.noise_var << ")";
    fail(ErrorKind::numerical_failure, msg.str());
  }
  chol_ = llt.matrixL();
  alpha_ = llt.solve(y_train_);
  const double n = static_cast<double>(y_train_.size());
  lml_ = -0.5 * y_train_.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

Prediction GPModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const BatchPrediction b = predict_batch(x.transpose());
  Prediction out{b.mean(0), b.variance(0), false};
  if (x.size() == scaling_.lower.size()) {
    out.extrapolated = ((x.array() < scaling_.lower.array()) || (x.array() > scaling_.upper.array())).any();
  }
  return out;
}

BatchPrediction GPModel::predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  require(x.cols() == dims(), ErrorKind::invalid_input, "prediction input has wrong dimension");
  const Eigen::MatrixXd ks = kernel_matrix(scaling_.normalize_rows(x), x_train_, params_);  // q x n
  BatchPrediction out;
  out.mean = (ks * alpha_).array() * scaling_.y_std + scaling_.y_mean;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());  // n x q
  const Eigen::ArrayXd latent = (params_.signal_var - v.colwise().squaredNorm().array()).max(0.0);
  out.variance = latent * (scaling_.y_std * scaling_.y_std);
  return out;
}

Eigen::VectorXd GPModel::mean_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  require(x.cols() == dims(), ErrorKind::invalid_input, "prediction input has wrong dimension");
  const Eigen::MatrixXd ks = kernel_matrix(scaling_.normalize_rows(x), x_train_, params_);
  return ((ks * alpha_).array() * scaling_.y_std + scaling_.y_mean).matrix();
}

double GPModel::mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require(x.size() == dims(), ErrorKind::invalid_input, "prediction input has wrong dimension");
  const Eigen::VectorXd xn = scaling_.normalize(x);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x_train_.rows(); ++j) acc += alpha_(j) * kernel(xn, x_train_.row(j), params_);
  return acc * scaling_.y_std + scaling_.y_mean;
}

double log_marginal_likelihood(const KernelParams& p, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(x.rows() == y.size() && x.rows() >= 1, ErrorKind::invalid_input, "need matching non-empty data");
  const Eigen::LLT<Eigen::MatrixXd> llt(training_covariance(p, x));
  require(llt.info() == Eigen::Success, ErrorKind::numerical_failure, "covariance not positive definite");
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd l = llt.matrixL();
  return -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

LmlGradient log_marginal_likelihood_gradient(const KernelParams& p, const Eigen::Ref<const Eigen::MatrixXd>& x,
                                             const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(x.rows() == y.size() && x.rows() >= 1, ErrorKind::invalid_input, "need matching non-empty data");
  require(x.cols() == p.dims(), ErrorKind::invalid_input, "lengthscales must match input dimension");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::ArrayXXd r2 = scaled_sq_dist(x, x, p.lengthscales);
  const Eigen::MatrixXd k_free = (p.signal_var * correlation_from_sq_dist(r2, p.nu)).matrix();
  Eigen::MatrixXd k = k_free;
  k.diagonal().array() += p.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  require(llt.info() == Eigen::Success, ErrorKind::numerical_failure, "covariance not positive definite");
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd l = llt.matrixL();

  LmlGradient out;
  out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;

  // dL/dtheta = 0.5 tr(W dK/dtheta), W = alpha alpha^T - K^-1
  const Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.gradient.resize(d + 2);
  const Eigen::ArrayXXd factor = p.signal_var * lengthscale_factor(r2, p.nu);
  for (Eigen::Index c = 0; c < d; ++c) {
    const Eigen::ArrayXd xc = x.col(c).array() / p.lengthscales(c);
    const Eigen::ArrayXXd delta2 = (xc.replicate(1, n).rowwise() - xc.transpose()).square();
    out.gradient(c) = 0.5 * (w.array() * factor * delta2).sum();
  }
  out.gradient(d) = 0.5 * (w.array() * k_free.array()).sum();
  out.gradient(d + 1) = 0.5 * p.noise_var * w.trace();
  return out;
}

Eigen::VectorXd to_log_vector(const KernelParams& p) {
  Eigen::VectorXd theta(p.dims() + 2);
  theta.head(p.dims()) = p.lengthscales.array().log();
  theta(p.dims()) = std::log(p.signal_var);
  theta(p.dims() + 1) = std::log(p.noise_var);
  return theta;
}

KernelParams from_log_vector(const Eigen::Ref<const Eigen::VectorXd>& theta, Smoothness nu) {
  require(theta.size() >= 3, ErrorKind::invalid_input, "log hyperparameter vector too short");
  const Eigen::Index d = theta.size() - 2;
  KernelParams p;
  p.lengthscales = theta.head(d).array().exp();
  p.signal_var = std::exp(theta(d));
  p.noise_var = std::exp(theta(d + 1));
  p.nu = nu;
  return p;
}

GPModel fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
            const Bounds& bounds, const FitConfig& config) {
  require(x.rows() >= 2, ErrorKind::insufficient_data, "GP fit needs at least 2 training points");
  require(x.rows() == y.size(), ErrorKind::invalid_input, "inputs and outputs differ in length");
  bounds.validate();
  require(x.cols() == bounds.dims(), ErrorKind::invalid_input, "inputs do not match bounds dimension");
  require(config.restarts >= 1, ErrorKind::invalid_input, "need at least one restart");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    require(bounds.contains(x.row(i).transpose(), 1e-9), ErrorKind::invalid_input,
            "training input " + std::to_string(i) + " outside bounds");
  }
  require(y.allFinite(), ErrorKind::invalid_input, "training outputs must be finite");

  Scaling scaling{bounds.lower, bounds.upper, y.mean(), 1.0};
  const double n = static_cast<double>(y.size());
  const double sd = std::sqrt((y.array() - scaling.y_mean).square().sum() / (n - 1.0));
  if (sd > 1e-12 * std::max(1.0, std::abs(scaling.y_mean))) scaling.y_std = sd;
  const Eigen::MatrixXd xn = scaling.normalize_rows(x);
  const Eigen::VectorXd yn = (y.array() - scaling.y_mean) / scaling.y_std;

  const Eigen::Index d = x.cols();
  Eigen::VectorXd lo(d + 2), hi(d + 2);
  lo.head(d).setConstant(std::log(config.lengthscale_min));
  hi.head(d).setConstant(std::log(config.lengthscale_max));
  lo(d) = std::log(config.signal_var_min);
  hi(d) = std::log(config.signal_var_max);
  lo(d + 1) = std::log(config.noise_var_min);
  hi(d + 1) = std::log(config.noise_var_max);

  const detail::SmoothObjective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    try {
      const LmlGradient r = log_marginal_likelihood_gradient(from_log_vector(theta, config.nu), xn, yn);
      grad = -r.gradient;
      return std::isfinite(r.value) ? -r.value : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      grad.setZero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  detail::BoxLbfgsResult best;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd start(d + 2);
    for (Eigen::Index i = 0; i < d + 2; ++i) start(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
    detail::BoxLbfgsResult res = detail::minimize_box_lbfgs(objective, start, lo, hi, config.max_iterations);
    if (std::isfinite(res.value) && res.value < best.value) best = std::move(res);
  }
  require(std::isfinite(best.value), ErrorKind::numerical_failure,
          "all hyperparameter restarts failed to produce a positive-definite covariance");
  return GPModel(from_log_vector(best.x, config.nu), scaling, xn, yn);
}

}  // namespace flowopt::gp
