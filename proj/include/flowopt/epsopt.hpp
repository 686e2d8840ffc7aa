#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "flowopt/domain.hpp"
#include "flowopt/tsemo.hpp"

namespace flowopt::epsopt {

/// min mean(-F_Product) s.t. mean(Δr²) <= epsilon, temp <= temp_upper.
struct EpsProblem {
  const tsemo::Models* models = nullptr;
  double epsilon = std::numeric_limits<double>::infinity();
  double temp_upper = 80.0;
  std::optional<DesignPoint> start;

  void validate(const Bounds& bounds) const;
};

struct EpsConfig {
  Bounds bounds = Bounds::reactor();
  int grid_resolution = 33;
  int starts = 64;
  std::uint64_t seed = 0;
};

/// Both GP means on a full tensor grid over `bounds`, shared by every solve
/// of a sweep. Axis k holds `resolution` equally spaced values.
class GridEvaluation {
 public:
  GridEvaluation(const tsemo::Models& models, const Bounds& bounds, int resolution);

  int resolution() const noexcept { return resolution_; }
  const Eigen::VectorXd& axis(Eigen::Index dim) const { return axes_[static_cast<std::size_t>(dim)]; }
  const Eigen::VectorXd& product_mean() const noexcept { return product_; }
  const Eigen::VectorXd& radius_mean() const noexcept { return radius_; }
  DesignPoint point(Eigen::Index flat) const;
  /// Half the sum over axes of the largest objective change between grid
  /// neighbours: a bound on how much better than the grid a true optimum
  /// between grid points can plausibly be.
  double slack() const noexcept { return slack_; }

 private:
  int resolution_;
  std::vector<Eigen::VectorXd> axes_;
  Eigen::VectorXd product_;
  Eigen::VectorXd radius_;
  double slack_ = 0.0;
};

struct GridResult {
  bool feasible = false;
  DesignPoint x;
  double objective = std::numeric_limits<double>::infinity();
  double radius = std::numeric_limits<double>::infinity();
  std::size_t evaluated = 0;  ///< grid points inside the temperature bound
};

/// Exhaustive search of the grid; temperatures above temp_upper are dropped.
GridResult grid_oracle(const GridEvaluation& grid, double epsilon, double temp_upper);
GridResult grid_oracle(const EpsProblem& p, int resolution, const Bounds& bounds = Bounds::reactor());

struct EpsSolution {
  bool feasible = false;
  DesignPoint x;
  double objective = std::numeric_limits<double>::infinity();  ///< mean(-F_Product)
  double radius = std::numeric_limits<double>::infinity();     ///< mean(Δr²)
  double epsilon = 0.0;
  double temp_upper = 0.0;
  /// Local search alone came within the grid slack of the grid optimum.
  bool certified = false;
  double grid_objective = std::numeric_limits<double>::infinity();
  double slack = 0.0;
};

EpsSolution solve_eps(const EpsProblem& p, const EpsConfig& config);
/// Uses a precomputed grid; `warm` points are extra local-search starts.
EpsSolution solve_eps(const EpsProblem& p, const EpsConfig& config, const GridEvaluation& grid,
                      const std::vector<DesignPoint>& warm = {});

/// One solve per (epsilon, temp_upper) pair, ordered by epsilon then
/// temp_upper. Optima are monotone in both because each solve is seeded
/// with the neighbouring solutions, which stay feasible as bounds relax.
std::vector<EpsSolution> sweep(const tsemo::Models& models, std::vector<double> epsilons,
                               std::vector<double> temp_uppers, const EpsConfig& config);

/// Smallest radius-GP mean found on the grid and by local refinement; no
/// epsilon below it can be satisfied.
double radius_floor(const tsemo::Models& models, const EpsConfig& config, double temp_upper = 80.0);

/// Feasible rows in the validation-table CSV layout.
void write_sweep_csv(std::ostream& out, const std::vector<EpsSolution>& rows);

}  // namespace flowopt::epsopt
