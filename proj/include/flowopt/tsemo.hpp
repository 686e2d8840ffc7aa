#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "flowopt/dataset.hpp"
#include "flowopt/domain.hpp"
#include "flowopt/gp.hpp"
#include "flowopt/moo.hpp"

namespace flowopt::tsemo {

struct TsemoConfig {
  int spectral_points = 4000;
  int ga_generations = 1000;
  int ga_population = 100;
  int batch_size = 5;
  /// Dimensions shared by every point of a batch.
  std::vector<Eigen::Index> group_dims = {kTemp, kCtab};
  /// Objectives are scaled to [0,1] by the measured data range; the
  /// hypervolume reference sits at 1 + hv_margin in every scaled objective.
  double hv_margin = 0.1;
  /// Draw fresh sampled functions for every batch point after the first.
  bool redraw_per_point = false;
  gp::FitConfig fit;  ///< fit.seed is replaced by a seed derived from `seed`
  ProcessConstants constants;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Models {
  gp::GPModel product;  ///< models -F_Product
  gp::GPModel radius;   ///< models squared radius deviation
};

/// One Thompson draw of the three objectives; temperature deviation is exact.
struct SampledObjectives {
  gp::SampledFunction product;
  gp::SampledFunction radius;
  double t_min = 60.0;

  /// Rows of `x` are raw designs; returns n x 3 objectives.
  Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const;
};

struct SuggestionRecord {
  int iteration = 0;
  std::uint64_t seed = 0;
  std::vector<DesignPoint> batch;
  /// Seeds of every sampled function used, in draw order (product, radius, ...).
  std::vector<std::uint64_t> sample_seeds;
  std::vector<ObjectiveVector> predicted;  ///< GP posterior means
  std::vector<Eigen::Vector3d> variance;   ///< GP posterior variances; ΔT has none
  /// Batch was topped up by perturbing selected points.
  bool padded = false;
};

/// Fits one GP per modeled objective on the trainable rows.
Models train_models(const Dataset& data, const Bounds& bounds, const TsemoConfig& config);

SampledObjectives draw_objectives(const Models& models, const TsemoConfig& config, std::uint64_t seed);

/// Non-dominated set of one Thompson draw, approximated by NSGA-II.
moo::ParetoFront sampled_pareto(const Models& models, const Bounds& bounds, const TsemoConfig& config,
                                std::uint64_t seed);

SuggestionRecord suggest_batch(const Dataset& data, const Bounds& bounds, const TsemoConfig& config,
                               int iteration = 0);
/// As above with models already trained on `data`.
SuggestionRecord suggest_batch(const Models& models, const Dataset& data, const Bounds& bounds,
                               const TsemoConfig& config, int iteration = 0);

/// hv(incumbent + candidate) - hv(incumbent).
double hypervolume_improvement(const Eigen::Ref<const Eigen::VectorXd>& candidate,
                               const Eigen::Ref<const Eigen::MatrixXd>& incumbent,
                               const Eigen::Ref<const Eigen::VectorXd>& ref);

/// Affine map of objectives onto the data range used for batch selection.
struct ObjectiveScaling {
  Eigen::VectorXd lower;
  Eigen::VectorXd range;

  static ObjectiveScaling from_data(const Eigen::Ref<const Eigen::MatrixXd>& objectives);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& objectives) const;
};

}  // namespace flowopt::tsemo
