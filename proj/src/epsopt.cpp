#include "flowopt/epsopt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "flowopt/rng.hpp"

namespace flowopt::epsopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class MeanModel {
 public:
  MeanModel(const tsemo::Models& m, double eps, Bounds box) : m_(m), eps_(eps), box_(std::move(box)) {}

  const Bounds& box() const noexcept { return box_; }
  double objective(const Eigen::Vector4d& x) const { return m_.product.mean(x); }
  double radius(const Eigen::Vector4d& x) const { return m_.radius.mean(x); }
  bool feasible(double radius) const { return !(radius > eps_); }
  double violation(const Eigen::Vector4d& x) const { return std::isinf(eps_) ? 0.0 : radius(x) - eps_; }
  double epsilon() const noexcept { return eps_; }

  Eigen::Vector4d clamp(Eigen::Vector4d x) const { return x.cwiseMax(box_.lower).cwiseMin(box_.upper); }

 private:
  const tsemo::Models& m_;
  double eps_;
  Bounds box_;
};

// Compass search with step halving. `f` may return +inf to reject a point.
Eigen::Vector4d pattern_search(const std::function<double(const Eigen::Vector4d&)>& f, Eigen::Vector4d x,
                               const MeanModel& mm, double step, double min_step, int max_evals) {
  double fx = f(x);
  const Eigen::Vector4d width = mm.box().width();
  int evals = 1;
  while (step > min_step && evals < max_evals) {
    bool improved = false;
    for (Eigen::Index d = 0; d < 4; ++d) {
      for (const double dir : {1.0, -1.0}) {
        Eigen::Vector4d y = x;
        y(d) += dir * step * width(d);
        y = mm.clamp(y);
        if (y(d) == x(d)) continue;
        const double fy = f(y);
        ++evals;
        if (fy < fx) {
          x = y;
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

// Newton steps on the constraint along its finite-difference gradient.
bool restore_feasibility(Eigen::Vector4d& x, const MeanModel& mm) {
  const Eigen::Vector4d width = mm.box().width();
  for (int it = 0; it < 40; ++it) {
    const double c = mm.violation(x);
    if (c <= 0) return true;
    Eigen::Vector4d g;
    for (Eigen::Index d = 0; d < 4; ++d) {
      const double h = 1e-6 * width(d);
      Eigen::Vector4d lo = x, hi = x;
      lo(d) = std::max(mm.box().lower(d), x(d) - h);
      hi(d) = std::min(mm.box().upper(d), x(d) + h);
      g(d) = (mm.violation(hi) - mm.violation(lo)) / (hi(d) - lo(d));
    }
    // Free coordinates only: a bound-pinned coordinate cannot move outward.
    for (Eigen::Index d = 0; d < 4; ++d) {
      if ((x(d) <= mm.box().lower(d) && g(d) > 0) || (x(d) >= mm.box().upper(d) && g(d) < 0)) g(d) = 0;
    }
    const double gg = g.squaredNorm();
    if (!(gg > 0)) return false;
    const double target = c + 1e-9 * std::max(1.0, std::abs(mm.epsilon()));
    Eigen::Vector4d y = mm.clamp(x - target / gg * g);
    // Backtrack if the linear model overshoots into a worse region.
    for (int ls = 0; ls < 20 && mm.violation(y) >= c; ++ls) y = mm.clamp(x - (target / gg) * std::ldexp(1.0, -ls - 1) * g);
    if (mm.violation(y) >= c) return false;
    x = y;
  }
  return mm.violation(x) <= 0;
}

struct Local {
  bool feasible = false;
  Eigen::Vector4d x;
  double objective = kInf;
  double radius = kInf;
};

Local refine(const Eigen::Vector4d& start, const MeanModel& mm) {
  Eigen::Vector4d x = mm.clamp(start);
  if (!std::isinf(mm.epsilon())) {
    for (double mu = 1e-3; mu <= 1e6; mu *= 10.0) {
      const auto penalized = [&](const Eigen::Vector4d& y) {
        const double v = std::max(0.0, mm.violation(y));
        return mm.objective(y) + mu * v * v;
      };
      x = pattern_search(penalized, x, mm, 0.05, 1e-4, 600);
    }
    if (!restore_feasibility(x, mm)) {
      // Phase one: descend the violation itself.
      const auto violation = [&](const Eigen::Vector4d& y) { return std::max(0.0, mm.violation(y)); };
      x = pattern_search(violation, mm.clamp(start), mm, 0.05, 1e-9, 4000);
      if (mm.violation(x) > 0 && !restore_feasibility(x, mm)) return {};
    }
  }
  const auto feasible_only = [&](const Eigen::Vector4d& y) {
    return mm.violation(y) <= 0 ? mm.objective(y) : kInf;
  };
  x = pattern_search(feasible_only, x, mm, 0.02, 1e-8, 4000);
  const double r = mm.radius(x);
  if (!mm.feasible(r)) return {};
  return {true, x, mm.objective(x), r};
}

double radical_inverse(std::uint64_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Halton sequence in bases 2, 3, 5, 7 with a seeded random shift modulo 1.
std::vector<Eigen::Vector4d> shifted_halton(int n, const Bounds& box, std::uint64_t seed) {
  static constexpr unsigned kBases[] = {2, 3, 5, 7};
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Vector4d shift;
  for (auto& s : shift) s = unit(rng);
  std::vector<Eigen::Vector4d> out;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector4d u;
    for (int d = 0; d < 4; ++d) {
      const double v = radical_inverse(static_cast<std::uint64_t>(i + 1), kBases[d]) + shift(d);
      u(d) = v - std::floor(v);
    }
    out.push_back(box.lower + u.cwiseProduct(box.width()));
  }
  return out;
}

Bounds capped(const Bounds& b, double temp_upper) {
  Bounds out = b;
  out.upper(kTemp) = std::min(out.upper(kTemp), temp_upper);
  return out;
}

bool better(const Local& a, double objective) { return a.feasible && a.objective < objective; }

}  // namespace

void EpsProblem::validate(const Bounds& bounds) const {
  require(models != nullptr && models->product.size() > 0 && models->radius.size() > 0, ErrorKind::invalid_input,
          "epsilon-constraint problem needs trained models");
  require(epsilon > 0, ErrorKind::invalid_input, "epsilon must be positive");
  require(temp_upper > bounds.lower(kTemp) && temp_upper <= bounds.upper(kTemp), ErrorKind::invalid_input,
          "temp_upper must lie in (T_lower, T_upper]");
}

GridEvaluation::GridEvaluation(const tsemo::Models& models, const Bounds& bounds, int resolution)
    : resolution_(resolution) {
  require(resolution >= 2, ErrorKind::invalid_input, "grid resolution must be at least 2");
  require(bounds.dims() == kDesignDims, ErrorKind::invalid_input, "grid needs 4-D bounds");
  const Eigen::Index r = resolution;
  for (Eigen::Index d = 0; d < kDesignDims; ++d) {
    axes_.push_back(Eigen::VectorXd::LinSpaced(r, bounds.lower(d), bounds.upper(d)));
  }
  const Eigen::Index slab = r * r * r;
  const Eigen::Index total = slab * r;
  product_.resize(total);
  radius_.resize(total);
  Eigen::MatrixXd block(slab, kDesignDims);
  // Flat index ((i0*r + i1)*r + i2)*r + i3 over (f_i, f_m, c_ctab, temp);
  // one block holds every point sharing i0.
  for (Eigen::Index i0 = 0; i0 < r; ++i0) {
    Eigen::Index row = 0;
    for (Eigen::Index i1 = 0; i1 < r; ++i1) {
      for (Eigen::Index i2 = 0; i2 < r; ++i2) {
        for (Eigen::Index i3 = 0; i3 < r; ++i3, ++row) {
          block.row(row) << axes_[0](i0), axes_[1](i1), axes_[2](i2), axes_[3](i3);
        }
      }
    }
    product_.segment(i0 * slab, slab) = models.product.mean_batch(block);
    radius_.segment(i0 * slab, slab) = models.radius.mean_batch(block);
  }
  Eigen::Index stride = 1;
  for (Eigen::Index d = kDesignDims; d-- > 0;) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < total; ++i) {
      if ((i / stride) % r == r - 1) continue;
      worst = std::max(worst, std::abs(product_(i + stride) - product_(i)));
    }
    slack_ += 0.5 * worst;
    stride *= r;
  }
}

DesignPoint GridEvaluation::point(Eigen::Index flat) const {
  const Eigen::Index r = resolution_;
  Eigen::Vector4d x;
  for (Eigen::Index d = kDesignDims; d-- > 0;) {
    x(d) = axes_[static_cast<std::size_t>(d)](flat % r);
    flat /= r;
  }
  return DesignPoint::from_vector(x);
}

GridResult grid_oracle(const GridEvaluation& grid, double epsilon, double temp_upper) {
  GridResult out;
  const Eigen::Index r = grid.resolution();
  const Eigen::VectorXd& temps = grid.axis(kTemp);
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < grid.product_mean().size(); ++i) {
    if (temps(i % r) > temp_upper) continue;
    ++out.evaluated;
    const double rad = grid.radius_mean()(i);
    if (rad > epsilon) continue;
    if (grid.product_mean()(i) < out.objective) {
      out.objective = grid.product_mean()(i);
      out.radius = rad;
      best = i;
    }
  }
  if (best >= 0) {
    out.feasible = true;
    out.x = grid.point(best);
  }
  return out;
}

GridResult grid_oracle(const EpsProblem& p, int resolution, const Bounds& bounds) {
  p.validate(bounds);
  return grid_oracle(GridEvaluation(*p.models, bounds, resolution), p.epsilon, p.temp_upper);
}

EpsSolution solve_eps(const EpsProblem& p, const EpsConfig& config) {
  p.validate(config.bounds);
  return solve_eps(p, config, GridEvaluation(*p.models, config.bounds, config.grid_resolution));
}

EpsSolution solve_eps(const EpsProblem& p, const EpsConfig& config, const GridEvaluation& grid,
                      const std::vector<DesignPoint>& warm) {
  p.validate(config.bounds);
  require(config.starts >= 0, ErrorKind::invalid_input, "start count must be non-negative");
  const MeanModel mm(*p.models, p.epsilon, capped(config.bounds, p.temp_upper));
  const GridResult g = grid_oracle(grid, p.epsilon, p.temp_upper);

  std::vector<Eigen::Vector4d> starts = shifted_halton(config.starts, mm.box(), derive_seed(config.seed, 0));
  if (p.start) starts.push_back(p.start->vector());
  for (const auto& w : warm) starts.push_back(w.vector());
  // The least-violating grid point reaches tight feasible sets the others miss.
  Eigen::Index lowest = -1;
  for (Eigen::Index i = 0; i < grid.radius_mean().size(); ++i) {
    if (grid.axis(kTemp)(i % grid.resolution()) > p.temp_upper) continue;
    if (lowest < 0 || grid.radius_mean()(i) < grid.radius_mean()(lowest)) lowest = i;
  }
  if (lowest >= 0) starts.push_back(grid.point(lowest).vector());
  // Matern-1/2 means have their cusps at the training inputs.
  const Eigen::MatrixXd& xt = p.models->radius.x_train();
  const gp::Scaling& sc = p.models->radius.scaling();
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    const Eigen::Vector4d raw = sc.lower + xt.row(i).transpose().cwiseProduct(sc.upper - sc.lower);
    if (mm.box().contains(raw)) starts.push_back(raw);
  }

  Local best;
  for (const auto& s : starts) {
    const Local l = refine(s, mm);
    if (better(l, best.objective)) best = l;
  }
  const double local_only = best.objective;
  if (g.feasible) {
    const Local l = refine(g.x.vector(), mm);
    if (better(l, best.objective)) best = l;
    if (g.objective < best.objective) {
      best = {true, g.x.vector(), g.objective, g.radius};
    }
  }
  // Warm starts are feasible by construction; keep them if search drifted.
  for (const auto& w : warm) {
    const Eigen::Vector4d x = w.vector();
    if (!mm.box().contains(x)) continue;
    const double r = mm.radius(x);
    const double f = mm.objective(x);
    if (mm.feasible(r) && f < best.objective) best = {true, x, f, r};
  }

  EpsSolution out;
  out.epsilon = p.epsilon;
  out.temp_upper = p.temp_upper;
  out.grid_objective = g.objective;
  out.slack = grid.slack();
  out.feasible = best.feasible;
  if (best.feasible) {
    out.x = DesignPoint::from_vector(best.x);
    out.objective = best.objective;
    out.radius = best.radius;
  }
  out.certified = !g.feasible || local_only <= g.objective + grid.slack();
  return out;
}

std::vector<EpsSolution> sweep(const tsemo::Models& models, std::vector<double> epsilons,
                               std::vector<double> temp_uppers, const EpsConfig& config) {
  std::sort(epsilons.begin(), epsilons.end());
  std::sort(temp_uppers.begin(), temp_uppers.end());
  const GridEvaluation grid(models, config.bounds, config.grid_resolution);
  const std::size_t ne = epsilons.size(), nt = temp_uppers.size();
  std::vector<EpsSolution> table(ne * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t e = 0; e < ne; ++e) {
      std::vector<DesignPoint> warm;
      if (e > 0 && table[(e - 1) * nt + t].feasible) warm.push_back(table[(e - 1) * nt + t].x);
      if (t > 0 && table[e * nt + t - 1].feasible) warm.push_back(table[e * nt + t - 1].x);
      EpsProblem p{&models, epsilons[e], temp_uppers[t], std::nullopt};
      table[e * nt + t] = solve_eps(p, config, grid, warm);
    }
  }
  return table;
}

double radius_floor(const tsemo::Models& models, const EpsConfig& config, double temp_upper) {
  // A model whose "objective" is the radius mean, refined without constraint.
  tsemo::Models swapped{models.radius, models.radius};
  const GridEvaluation grid(swapped, config.bounds, config.grid_resolution);
  const GridResult g = grid_oracle(grid, kInf, temp_upper);
  EpsProblem p{&swapped, kInf, temp_upper, g.x};
  EpsConfig c = config;
  const EpsSolution s = solve_eps(p, c, grid);
  return std::min(s.objective, g.objective);
}

void write_sweep_csv(std::ostream& out, const std::vector<EpsSolution>& rows) {
  out << "f_i,f_m,temp,c_ctab,eps,objective\n";
  for (const auto& r : rows) {
    if (!r.feasible) continue;
    out << std::fixed << std::setprecision(2) << r.x.f_i << ',' << r.x.f_m << ',' << r.x.temp << ',' << r.x.c_ctab
        << ',' << std::defaultfloat << std::setprecision(6) << r.epsilon << ',' << std::fixed << std::setprecision(2)
        << r.objective << std::defaultfloat << '\n';
  }
}

}  // namespace flowopt::epsopt
