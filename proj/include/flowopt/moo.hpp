#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "flowopt/domain.hpp"
#include "flowopt/error.hpp"

namespace flowopt::moo {

/// Pareto dominance under minimization: a <= b everywhere and a < b somewhere.
template <typename DerivedA, typename DerivedB>
bool dominates(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  require(a.size() == b.size(), ErrorKind::invalid_input, "dominance check on vectors of different length");
  bool strictly_better = false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > b(i)) return false;
    if (a(i) < b(i)) strictly_better = true;
  }
  return strictly_better;
}

using Front = std::vector<Eigen::Index>;

/// Partitions the rows of `points` into successive non-dominated fronts.
/// O(n log^2 n) for up to three objectives, O(k n^2) beyond.
std::vector<Front> nondominated_sort(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Row indices of the first front, in input order.
Front nondominated_indices(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// NSGA-II crowding distance of each row of one front.
Eigen::VectorXd crowding_distance(const Eigen::Ref<const Eigen::MatrixXd>& front);

/// Approximation of a Pareto set: row i of `decisions` maps to row i of
/// `objectives`; every objective row is <= `reference`.
struct ParetoFront {
  Eigen::MatrixXd decisions;
  Eigen::MatrixXd objectives;
  Eigen::VectorXd reference;

  Eigen::Index size() const noexcept { return objectives.rows(); }
};

/// Per-objective maximum plus `margin` times the objective range (plus
/// `margin` itself for a degenerate range).
Eigen::VectorXd reference_point(const Eigen::Ref<const Eigen::MatrixXd>& objectives, double margin = 0.1);

/// Exact Lebesgue measure dominated by the rows of `points` and bounded by
/// `ref`, for one to three objectives. Rows not strictly below `ref` in
/// every objective are ignored.
double hypervolume(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& ref);

/// Exclusive contribution of each row: hv(all) - hv(all without the row).
Eigen::VectorXd hypervolume_contributions(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                          const Eigen::Ref<const Eigen::VectorXd>& ref);

// ---------------------------------------------------------------------------
// NSGA-II

/// Rows in, one objective row out per input row.
using BatchObjective = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Decision dimensions held at fixed values.
using FrozenDims = std::map<Eigen::Index, double>;

struct Nsga2Config {
  int population = 100;
  int generations = 100;
  std::uint64_t seed = 0;
  double crossover_rate = 0.9;
  double crossover_eta = 15.0;
  double mutation_eta = 20.0;
  double mutation_rate = -1.0;  ///< per variable; negative means 1 / free dims
};

/// Raised when the objective throws or returns non-finite values.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Eigen::VectorXd decision)
      : Error(ErrorKind::numerical_failure, what), decision_(std::move(decision)) {}
  const Eigen::VectorXd& decision() const noexcept { return decision_; }

 private:
  Eigen::VectorXd decision_;
};

/// Elitist GA with non-dominated sorting, crowding, binary tournaments,
/// simulated binary crossover and polynomial mutation. Returns the final
/// non-dominated set with duplicate decisions removed.
ParetoFront nsga2(const BatchObjective& objective, const Bounds& box, const Nsga2Config& config,
                  const FrozenDims& frozen = {});

}  // namespace flowopt::moo
