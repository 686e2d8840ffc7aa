#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "flowopt/dataset.hpp"
#include "flowopt/gp.hpp"
#include "flowopt/rng.hpp"

using namespace flowopt;
using namespace flowopt::gp;

namespace {

Eigen::MatrixXd uniform(Eigen::Index n, Eigen::Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

KernelParams random_params(Eigen::Index d, Rng& rng, Smoothness nu) {
  std::uniform_real_distribution<double> u(-1.5, 1.0);
  KernelParams p;
  p.nu = nu;
  p.lengthscales.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) p.lengthscales(k) = std::pow(10.0, u(rng));
  p.signal_var = std::pow(10.0, u(rng));
  p.noise_var = std::pow(10.0, u(rng) - 2.0);
  return p;
}

// Independent implementation: explicit matrix inverse and determinant.
double dense_lml(const KernelParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double r2 = 0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) r2 += std::pow((x(i, c) - x(j, c)) / p.lengthscales(c), 2);
      k(i, j) = p.signal_var * matern_correlation(std::sqrt(r2), p.nu) + (i == j ? p.noise_var : 0.0);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  return -0.5 * y.dot(lu.inverse() * y) - 0.5 * std::log(lu.determinant()) -
         0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi);
}

Bounds unit_box(Eigen::Index d) { return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)}; }

GPModel exact_model(KernelParams p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Scaling s;
  s.lower = Eigen::VectorXd::Zero(x.cols());
  s.upper = Eigen::VectorXd::Ones(x.cols());
  return GPModel(std::move(p), std::move(s), x, y);
}

}  // namespace

TEST_CASE("kernel closed forms") {
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd a(1), b(1);
  a << 0.2;
  b << 1.2;
  CHECK(kernel(a, a, p) == 1.0);
  CHECK(kernel(a, b, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(kernel(a, b, p) == kernel(b, a, p));
  p.signal_var = 2.5;
  CHECK(kernel(b, b, p) == 2.5);
  Eigen::VectorXd c(2);
  CHECK_THROWS_AS(kernel(a, c, p), Error);
}

TEST_CASE("kernel matrices are symmetric PSD") {
  Rng rng(3);
  for (auto nu : {Smoothness::half, Smoothness::three_halves, Smoothness::five_halves}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto x = uniform(5, 3, rng);
      auto p = random_params(3, rng, nu);
      const Eigen::MatrixXd k = kernel_matrix(x, x, p);
      CHECK((k - k.transpose()).norm() == 0.0);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("log marginal likelihood matches the dense-inverse formula") {
  Rng rng(11);
  for (int rep = 0; rep < 60; ++rep) {
    const Eigen::Index n = 1 + rep % 8;
    const auto x = uniform(n, 2, rng);
    const Eigen::VectorXd y = uniform(n, 1, rng).col(0).array() * 2 - 1;
    const auto p = random_params(2, rng, static_cast<Smoothness>(rep % 3));
    const double ref = dense_lml(p, x, y);
    CHECK(log_marginal_likelihood(p, x, y) == doctest::Approx(ref).epsilon(1e-8));
  }
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Ones(1);
  p.signal_var = 0.7;
  p.noise_var = 0.1;
  const Eigen::MatrixXd x1 = Eigen::MatrixXd::Constant(1, 1, 0.3);
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(1);
  CHECK(log_marginal_likelihood(p, x1, y0) ==
        doctest::Approx(-0.5 * std::log(0.8) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("log marginal likelihood gradient matches central differences") {
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = uniform(5, 3, rng);
    const Eigen::VectorXd y = uniform(5, 1, rng).col(0);
    const auto nu = static_cast<Smoothness>(rep % 3);
    const auto p = random_params(3, rng, nu);
    const auto g = log_marginal_likelihood_gradient(p, x, y);
    CHECK(g.value == doctest::Approx(log_marginal_likelihood(p, x, y)).epsilon(1e-12));
    const Eigen::VectorXd theta = to_log_vector(p);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, dn = theta;
      up(i) += h;
      dn(i) -= h;
      const double fd = (log_marginal_likelihood(from_log_vector(up, nu), x, y) -
                         log_marginal_likelihood(from_log_vector(dn, nu), x, y)) /
                        (2 * h);
      CHECK(g.gradient(i) == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
    }
  }
}

TEST_CASE("more noise raises the likelihood of pure noise while below its variance") {
  Rng rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto x = uniform(40, 1, rng);
  Eigen::VectorXd y(40);
  for (auto& v : y) v = normal(rng);
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Constant(1, 0.01);
  p.signal_var = 1e-3;
  for (double nv = 0.01; nv < 0.25; nv *= 2) {
    p.noise_var = nv;
    const double a = log_marginal_likelihood(p, x, y);
    p.noise_var = 2 * nv;
    CHECK(log_marginal_likelihood(p, x, y) > a);
  }
}

TEST_CASE("two-point posterior mean closed form") {
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Ones(1);
  p.noise_var = 1e-12;
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  Eigen::VectorXd y(2);
  y << 0, 1;
  const GPModel m = exact_model(p, x, y);
  const double e = std::exp(-0.5), e1 = std::exp(-1.0);
  const double closed = e * (1 - e1) / (1 - e1 * e1);
  CHECK(closed == doctest::Approx(0.4434).epsilon(1e-4));
  CHECK(m.mean(Eigen::VectorXd::Constant(1, 0.5)) == doctest::Approx(closed).epsilon(1e-9));
  CHECK(std::abs(m.mean(Eigen::VectorXd::Constant(1, 0.5)) - 0.4434) < 1e-4);
  const Eigen::MatrixXd llt = m.chol() * m.chol().transpose();
  Eigen::MatrixXd k = kernel_matrix(x, x, p);
  k.diagonal().array() += p.noise_var;
  CHECK((llt - k).norm() <= 1e-8 * k.norm());
}

TEST_CASE("prediction reverts to the prior far from data") {
  Rng rng(2);
  const auto x = uniform(6, 2, rng);
  const Eigen::VectorXd y = uniform(6, 1, rng).col(0);
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Constant(2, 0.05);
  p.signal_var = 1.3;
  p.noise_var = 1e-4;
  Scaling s;
  s.lower = Eigen::VectorXd::Zero(2);
  s.upper = Eigen::VectorXd::Ones(2);
  s.y_mean = 4.0;
  s.y_std = 2.0;
  const GPModel m(p, s, x, y);
  const auto far = m.predict(Eigen::VectorXd::Constant(2, 3.0));
  CHECK(far.extrapolated);
  CHECK(far.mean == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(far.variance == doctest::Approx(1.3 * 4.0).epsilon(1e-3));

  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto at = m.predict(x.row(i).transpose());
    CHECK(at.variance >= 0.0);
    CHECK(at.variance / 4.0 <= p.noise_var + 1e-8);
    CHECK(std::abs((at.mean - 4.0) / 2.0 - y(i)) <= 3 * std::sqrt(p.noise_var));
  }
  const auto batch = m.predict_batch(uniform(50, 2, rng));
  CHECK((batch.variance.array() >= 0.0).all());
}

TEST_CASE("fit on simple targets") {
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  Eigen::VectorXd y(2);
  y << 0, 1;
  const GPModel m = fit(x, y, unit_box(1));
  const double tol = 3 * std::sqrt(m.params().noise_var) * m.scaling().y_std;
  CHECK(std::abs(m.mean(Eigen::VectorXd::Zero(1)) - 0.0) <= tol + 1e-9);
  CHECK(std::abs(m.mean(Eigen::VectorXd::Ones(1)) - 1.0) <= tol + 1e-9);

  Rng rng(4);
  const auto xc = uniform(6, 2, rng);
  const GPModel c = fit(xc, Eigen::VectorXd::Constant(6, 2.5), unit_box(2));
  CHECK(c.mean(Eigen::VectorXd::Constant(2, 0.3)) == doctest::Approx(2.5).epsilon(1e-9));

  CHECK_THROWS_AS(fit(x.topRows(1), y.head(1), unit_box(1)), Error);
}

TEST_CASE("fit is invariant to affine input rescaling") {
  Rng rng(8);
  const auto u = uniform(12, 2, rng);
  Eigen::VectorXd y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y(i) = std::sin(3 * u(i, 0)) + u(i, 1) * u(i, 1);
  Bounds raw{Eigen::Vector2d(-5, 100), Eigen::Vector2d(15, 100.5)};
  Eigen::MatrixXd xr = u;
  for (Eigen::Index k = 0; k < 2; ++k) xr.col(k) = raw.lower(k) + u.col(k).array() * raw.width()(k);
  FitConfig cfg;
  cfg.seed = 17;
  const GPModel a = fit(u, y, unit_box(2), cfg);
  const GPModel b = fit(xr, y, raw, cfg);
  const auto probe = uniform(20, 2, rng);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    Eigen::Vector2d pr = raw.lower + probe.row(i).transpose().cwiseProduct(raw.width());
    CHECK(a.mean(probe.row(i).transpose()) == doctest::Approx(b.mean(pr)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("leave-one-out error on the SI product flow") {
  const Dataset d = si_table_s1();
  const Eigen::MatrixXd x = d.trainable_inputs();
  const Eigen::VectorXd y = -d.trainable_objectives().col(kNegProductFlow);
  const auto n = x.rows();
  double sse = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd xt(n - 1, 4);
    Eigen::VectorXd yt(n - 1);
    for (Eigen::Index j = 0, r = 0; j < n; ++j) {
      if (j == i) continue;
      xt.row(r) = x.row(j);
      yt(r++) = y(j);
    }
    FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    const GPModel m = fit(xt, yt, Bounds::reactor(), cfg);
    sse += std::pow(m.mean(x.row(i).transpose()) - y(i), 2);
  }
  const double rmse = std::sqrt(sse / static_cast<double>(n));
  const double sd = std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(n - 1));
  MESSAGE("LOO RMSE " << rmse << " vs sd " << sd);
  CHECK(rmse < sd);
}

TEST_CASE("fit is reproducible per seed") {
  const Dataset d = si_table_s1();
  FitConfig cfg;
  cfg.seed = 99;
  const Eigen::VectorXd y = d.trainable_objectives().col(kSqRadiusDev);
  const GPModel a = fit(d.trainable_inputs(), y, Bounds::reactor(), cfg);
  const GPModel b = fit(d.trainable_inputs(), y, Bounds::reactor(), cfg);
  CHECK(a.params().lengthscales == b.params().lengthscales);
  CHECK(a.alpha() == b.alpha());
}
