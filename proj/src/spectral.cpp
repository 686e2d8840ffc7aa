#include <numbers>

#include "flowopt/detail/fast_cos.hpp"
#include "flowopt/gp.hpp"
#include "flowopt/rng.hpp"

namespace flowopt::gp {
namespace {

constexpr Eigen::Index kEvalChunk = 128;

double smoothness_value(Smoothness nu) {
  switch (nu) {
    case Smoothness::half: return 0.5;
    case Smoothness::three_halves: return 1.5;
    case Smoothness::five_halves: return 2.5;
  }
  return 0.5;
}

// Cosine features for a block of normalized inputs (rows), scaled.
Eigen::MatrixXd features_block(const SampledFunction& f, const Eigen::Ref<const Eigen::MatrixXd>& xn) {
  Eigen::MatrixXd arg = xn * f.frequencies.transpose();
  arg.rowwise() += f.phases.transpose();
  detail::cos_inplace(arg.data(), static_cast<std::size_t>(arg.size()));
  return f.feature_scale * arg;
}

}  // namespace

Eigen::VectorXd feature_map(const SampledFunction& f, const Eigen::Ref<const Eigen::VectorXd>& x_norm) {
  require(x_norm.size() == f.frequencies.cols(), ErrorKind::invalid_input, "feature input has wrong dimension");
  return features_block(f, x_norm.transpose()).transpose();
}

double SampledFunction::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return evaluate_batch(x.transpose())(0);
}

Eigen::VectorXd SampledFunction::evaluate_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  require(x.cols() == frequencies.cols(), ErrorKind::invalid_input, "sample input has wrong dimension");
  const Eigen::MatrixXd xn = scaling.normalize_rows(x);
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, x.rows() - start);
    out.segment(start, len) = features_block(*this, xn.middleRows(start, len)) * weights;
  }
  return (out.array() * scaling.y_std + scaling.y_mean).matrix();
}

SampledFunction spectral_sample(const GPModel& model, Eigen::Index m, std::uint64_t seed) {
  require(m >= 1, ErrorKind::invalid_input, "spectral sample needs at least one feature");
  require(model.size() >= 1, ErrorKind::invalid_input, "spectral sample needs a fitted model");
  const KernelParams& p = model.params();
  const Eigen::Index d = model.dims();
  const Eigen::Index n = model.size();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double nu = smoothness_value(p.nu);
  std::chi_squared_distribution<double> chi2(2.0 * nu);

  SampledFunction f;
  f.seed = seed;
  f.scaling = model.scaling();
  f.feature_scale = std::sqrt(2.0 * p.signal_var / static_cast<double>(m));
  f.frequencies.resize(m, d);
  f.phases.resize(m);
  // Matern-nu spectral density: multivariate Student-t with 2 nu degrees of
  // freedom, scaled per dimension by the inverse lengthscale.
  for (Eigen::Index j = 0; j < m; ++j) {
    const double scale = std::sqrt(2.0 * nu / chi2(rng));
    for (Eigen::Index k = 0; k < d; ++k) f.frequencies(j, k) = normal(rng) * scale / p.lengthscales(k);
    f.phases(j) = 2.0 * std::numbers::pi * unit(rng);
  }

  // Posterior draw of the feature weights by Matheron's rule: a prior draw
  // corrected through the n x n dual system, equivalent to sampling
  // N(A^-1 Phi^T y / s2, A^-1) with A = Phi^T Phi / s2 + I.
  f.weights.setZero(m);
  const Eigen::MatrixXd phi = features_block(f, model.x_train());  // n x m
  Eigen::VectorXd prior(m);
  for (Eigen::Index j = 0; j < m; ++j) prior(j) = normal(rng);
  Eigen::VectorXd noise(n);
  const double noise_sd = std::sqrt(p.noise_var);
  for (Eigen::Index i = 0; i < n; ++i) noise(i) = noise_sd * normal(rng);

  Eigen::MatrixXd gram = phi * phi.transpose();
  gram.diagonal().array() += p.noise_var;
  const Eigen::VectorXd resid = model.y_train() - phi * prior - noise;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  require(ldlt.info() == Eigen::Success, ErrorKind::numerical_failure, "feature Gram matrix factorization failed");
  f.weights = prior + phi.transpose() * ldlt.solve(resid);
  return f;
}

}  // namespace flowopt::gp
