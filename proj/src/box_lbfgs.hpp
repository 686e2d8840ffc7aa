#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace flowopt::detail {

// Objective returning f(x) and writing the gradient; non-finite f marks an
// infeasible trial point.
using SmoothObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Projected limited-memory BFGS with Armijo backtracking along the projected
// path. Variables pinned at a bound with the gradient pointing outward are
// held fixed for the step.
inline BoxLbfgsResult minimize_box_lbfgs(const SmoothObjective& f, Eigen::VectorXd x, const Eigen::VectorXd& lo,
                                         const Eigen::VectorXd& hi, int max_iterations, int memory = 8) {
  const auto project = [&](const Eigen::VectorXd& v) { return v.cwiseMax(lo).cwiseMin(hi).eval(); };
  x = project(x);
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  BoxLbfgsResult out{x, fx, 0};
  if (!std::isfinite(fx)) return out;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::Array<bool, Eigen::Dynamic, 1> pinned(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pinned(i) = (x(i) <= lo(i) && g(i) > 0) || (x(i) >= hi(i) && g(i) < 0);
    }
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pinned(i)) pg(i) = 0;
    }
    if (pg.lpNorm<Eigen::Infinity>() < 1e-7) break;

    // two-loop recursion on the free subspace
    Eigen::VectorXd q = pg;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      alphas[k] = rho * s_hist[k].dot(q);
      q -= alphas[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      const double beta = rho * y_hist[k].dot(q);
      q += (alphas[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pinned(i)) dir(i) = 0;
    }
    if (dir.dot(pg) >= 0) {
      dir = -pg;
      s_hist.clear();
      y_hist.clear();
    }

    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>()));
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(x + step * dir);
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double f_old = fx;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    if (std::abs(f_old - fx) <= 1e-12 * std::max(1.0, std::abs(fx))) break;
  }
  out.x = x;
  out.value = fx;
  return out;
}

}  // namespace flowopt::detail
