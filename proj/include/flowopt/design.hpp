#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "flowopt/domain.hpp"

namespace flowopt {

/// Where a sample sits inside its stratum.
enum class LhsPlacement { random, centered };

/// n x d Latin hypercube in [0,1)^d: every column hits each of the n bins
/// [i/n, (i+1)/n) exactly once. Deterministic for a fixed seed.
Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                    LhsPlacement placement = LhsPlacement::random);

/// A day's worth of runs at one temperature and surfactant level.
struct ExperimentGroup {
  double temp = 0.0;
  double c_ctab = 0.0;
  std::vector<std::pair<double, double>> settings;  ///< (f_i, f_m)

  std::vector<DesignPoint> expand() const;
};

/// Two-stage design: (temp, c_ctab) per group from one LHS, then (f_i, f_m)
/// from an independent LHS within each group.
std::vector<ExperimentGroup> grouped_initial_design(int n_groups, int per_group, const Bounds& bounds,
                                                    std::uint64_t seed,
                                                    LhsPlacement placement = LhsPlacement::random);

}  // namespace flowopt
