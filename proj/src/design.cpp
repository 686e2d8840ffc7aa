#include "flowopt/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowopt/error.hpp"
#include "flowopt/rng.hpp"

namespace flowopt {
namespace {

Eigen::MatrixXd lhs_from(Eigen::Index n, Eigen::Index d, Rng& rng, LhsPlacement placement) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd out(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double offset = placement == LhsPlacement::centered ? 0.5 : unit(rng);
      const double v = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + offset) / static_cast<double>(n);
      // keep the half-open bin contract under rounding
      const double bin_hi = static_cast<double>(perm[static_cast<std::size_t>(i)] + 1) / static_cast<double>(n);
      out(i, j) = std::min(v, std::nextafter(bin_hi, 0.0));
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, std::uint64_t seed, LhsPlacement placement) {
  require(n >= 1 && d >= 1, ErrorKind::invalid_input, "lhs needs n >= 1 and d >= 1");
  Rng rng(seed);
  return lhs_from(n, d, rng, placement);
}

std::vector<DesignPoint> ExperimentGroup::expand() const {
  std::vector<DesignPoint> out;
  out.reserve(settings.size());
  for (const auto& [f_i, f_m] : settings) out.push_back({f_i, f_m, c_ctab, temp});
  return out;
}

std::vector<ExperimentGroup> grouped_initial_design(int n_groups, int per_group, const Bounds& bounds,
                                                    std::uint64_t seed, LhsPlacement placement) {
  require(n_groups >= 1 && per_group >= 1, ErrorKind::invalid_input, "need at least one group and one setting");
  bounds.validate();
  require(bounds.dims() == kDesignDims, ErrorKind::invalid_input, "grouped design needs 4-D reactor bounds");

  const auto scale = [&](double u, Eigen::Index dim) {
    return bounds.lower(dim) + u * (bounds.upper(dim) - bounds.lower(dim));
  };

  const Eigen::MatrixXd group_levels = lhs(n_groups, 2, derive_seed(seed, 0), placement);
  std::vector<ExperimentGroup> groups(static_cast<std::size_t>(n_groups));
  for (int g = 0; g < n_groups; ++g) {
    auto& group = groups[static_cast<std::size_t>(g)];
    group.temp = scale(group_levels(g, 0), kTemp);
    group.c_ctab = scale(group_levels(g, 1), kCtab);
    const Eigen::MatrixXd flows = lhs(per_group, 2, derive_seed(seed, 1 + static_cast<std::uint64_t>(g)), placement);
    for (int s = 0; s < per_group; ++s) {
      group.settings.emplace_back(scale(flows(s, 0), kFlowInitiator), scale(flows(s, 1), kFlowMonomer));
    }
  }
  return groups;
}

}  // namespace flowopt
