#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>

#include "flowopt/domain.hpp"
#include "flowopt/error.hpp"

namespace flowopt::gp {

/// Matern smoothness nu in {1/2, 3/2, 5/2}.
enum class Smoothness { half, three_halves, five_halves };

struct KernelParams {
  Eigen::VectorXd lengthscales;  ///< per input dimension, normalized units
  double signal_var = 1.0;
  double noise_var = 1e-6;
  Smoothness nu = Smoothness::half;

  Eigen::Index dims() const { return lengthscales.size(); }
};

/// Unit-variance Matern correlation at scaled distance r.
inline double matern_correlation(double r, Smoothness nu) {
  switch (nu) {
    case Smoothness::half: return std::exp(-r);
    case Smoothness::three_halves: {
      const double s = std::sqrt(3.0) * r;
      return (1.0 + s) * std::exp(-s);
    }
    case Smoothness::five_halves: {
      const double s = std::sqrt(5.0) * r;
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
  }
  return 0.0;
}

/// Anisotropic Matern covariance between two points.
template <typename DerivedA, typename DerivedB>
double kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, const KernelParams& p);

/// Covariance matrix between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelParams& p);

/// Input box normalization and output standardization used by a model.
struct Scaling {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double y_mean = 0.0;
  double y_std = 1.0;

  Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return ((x - lower).array() / (upper - lower).array()).matrix();
  }
  /// Normalizes each row of a raw input matrix.
  Eigen::MatrixXd normalize_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

struct FitConfig {
  int restarts = 10;
  std::uint64_t seed = 0;
  Smoothness nu = Smoothness::half;
  double lengthscale_min = 1e-2;
  double lengthscale_max = 1e2;
  double signal_var_min = 1e-2;
  double signal_var_max = 1e2;
  double noise_var_min = 1e-6;  ///< noise floor, standardized units
  double noise_var_max = 1.0;
  int max_iterations = 200;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  bool extrapolated = false;
};

struct BatchPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Fitted GP regression model. Immutable; all quantities needed for
/// prediction are computed at construction.
class GPModel {
 public:
  GPModel() = default;

  /// Builds the model from normalized training data. Throws
  /// numerical_failure if K + noise_var*I is not positive definite.
  GPModel(KernelParams params, Scaling scaling, Eigen::MatrixXd x_train, Eigen::VectorXd y_train);

  const KernelParams& params() const noexcept { return params_; }
  const Scaling& scaling() const noexcept { return scaling_; }
  const Eigen::MatrixXd& x_train() const noexcept { return x_train_; }  ///< normalized
  const Eigen::VectorXd& y_train() const noexcept { return y_train_; }  ///< standardized
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  double log_marginal_likelihood() const noexcept { return lml_; }
  Eigen::Index dims() const noexcept { return x_train_.cols(); }
  Eigen::Index size() const noexcept { return x_train_.rows(); }

  /// Posterior of the latent function at a raw input, in raw output units.
  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Rows of `x` are raw inputs.
  BatchPrediction predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  /// Posterior mean only; cheaper than predict_batch.
  Eigen::VectorXd mean_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  double mean(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  KernelParams params_;
  Scaling scaling_;
  Eigen::MatrixXd x_train_;
  Eigen::VectorXd y_train_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

/// Maximum-likelihood GP fit with multistart box-constrained quasi-Newton
/// search over log-hyperparameters. Rows of `x` are raw inputs.
GPModel fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
            const Bounds& bounds, const FitConfig& config = {});

/// log p(y | X, params) for normalized inputs and standardized outputs.
double log_marginal_likelihood(const KernelParams& p, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y);

struct LmlGradient {
  double value = 0.0;
  /// d/d[log l_1..log l_d, log signal_var, log noise_var]
  Eigen::VectorXd gradient;
};

LmlGradient log_marginal_likelihood_gradient(const KernelParams& p, const Eigen::Ref<const Eigen::MatrixXd>& x,
                                             const Eigen::Ref<const Eigen::VectorXd>& y);

/// Packs hyperparameters into the log vector used for fitting, and back.
Eigen::VectorXd to_log_vector(const KernelParams& p);
KernelParams from_log_vector(const Eigen::Ref<const Eigen::VectorXd>& theta, Smoothness nu);

// ---------------------------------------------------------------------------
// Thompson sampling via random Fourier features.

/// One deterministic draw from the (feature-approximated) GP posterior.
struct SampledFunction {
  Eigen::MatrixXd frequencies;  ///< m x d, normalized input units
  Eigen::VectorXd phases;       ///< m, in [0, 2 pi)
  Eigen::VectorXd weights;      ///< m
  double feature_scale = 0.0;   ///< sqrt(2 signal_var / m)
  Scaling scaling;
  std::uint64_t seed = 0;

  Eigen::Index features() const noexcept { return phases.size(); }

  /// Raw output at a raw input.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Rows of `x` are raw inputs.
  Eigen::VectorXd evaluate_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

/// Cosine feature vector phi(x) (length m) at a normalized input.
Eigen::VectorXd feature_map(const SampledFunction& f, const Eigen::Ref<const Eigen::VectorXd>& x_norm);

/// Draws frequencies from the Matern spectral density and weights from the
/// Bayesian linear-model posterior over the cosine features.
SampledFunction spectral_sample(const GPModel& model, Eigen::Index m, std::uint64_t seed);

// ---------------------------------------------------------------------------

template <typename DerivedA, typename DerivedB>
double kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, const KernelParams& p) {
  require(a.size() == p.dims() && b.size() == p.dims(), ErrorKind::invalid_input,
          "kernel input dimension does not match lengthscales");
  double r2 = 0.0;
  for (Eigen::Index k = 0; k < p.dims(); ++k) {
    const double z = (a(k) - b(k)) / p.lengthscales(k);
    r2 += z * z;
  }
  return p.signal_var * matern_correlation(std::sqrt(r2), p.nu);
}

}  // namespace flowopt::gp
