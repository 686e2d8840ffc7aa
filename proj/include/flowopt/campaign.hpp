#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowopt/dataset.hpp"
#include "flowopt/design.hpp"
#include "flowopt/domain.hpp"
#include "flowopt/moo.hpp"
#include "flowopt/tsemo.hpp"
#include "flowopt/virtlab.hpp"

namespace flowopt::campaign {

struct CampaignConfig {
  Bounds bounds = Bounds::reactor();
  tsemo::TsemoConfig tsemo;  ///< tsemo.constants is the process model
  int n_groups = 3;
  int per_group = 5;
  LhsPlacement placement = LhsPlacement::random;
  int max_iterations = 11;
  std::uint64_t seed = 0;

  const ProcessConstants& constants() const noexcept { return tsemo.constants; }
  void validate() const;
};

struct Experiment {
  int id = 0;
  int iteration = 0;  ///< 0 for the initial design
  DesignPoint x;
  std::optional<Measurement> measurement;
  std::optional<ObjectiveVector> objectives;  ///< absent while pending or when excluded

  bool pending() const noexcept { return !measurement.has_value(); }
  bool trainable() const noexcept { return objectives.has_value(); }
};

/// Campaign history. Mutations go through the functions below, each of
/// which appends one serialized event to `journal`; the campaign file is a
/// header line followed by the journal, so saved files only ever grow.
struct CampaignState {
  CampaignConfig config;
  std::vector<Experiment> log;
  std::vector<tsemo::SuggestionRecord> suggestions;
  int iteration = 0;
  std::vector<std::string> journal;

  bool complete() const noexcept { return iteration >= config.max_iterations; }
  const Experiment* find(int id) const;
  std::vector<const Experiment*> pending() const;
  /// Recorded experiments in log order, excluded ones flagged.
  Dataset dataset() const;
  /// Seed of the suggestion that produces iteration `it`.
  std::uint64_t iteration_seed(int it) const;
};

/// Fresh campaign whose log holds the grouped initial design, all pending.
CampaignState init_campaign(const CampaignConfig& config);

/// Stores the measurement and, unless excluded, its objective vector.
/// Throws not_found for an unknown id and conflict for a recorded one; the
/// state is unchanged on error.
void record_measurement(CampaignState& state, int id, const Measurement& m);

/// Runs one suggestion on the trainable rows, appends the batch as pending
/// experiments and advances the iteration counter.
const tsemo::SuggestionRecord& next_iteration(CampaignState& state);

/// Campaign rebuilt from a finished table: measurements are back-solved
/// from the stored objectives and the counter resumes after the last
/// iteration in the table.
CampaignState campaign_from_dataset(const Dataset& data, const CampaignConfig& config);

struct ExperimentalPoint {
  int id = 0;
  int iteration = 0;
  DesignPoint x;
  ObjectiveVector y;  ///< y.sigma holds propagated measurement uncertainty
};

struct ParetoReport {
  moo::ParetoFront front;        ///< decisions n x 4, objectives n x 3
  Eigen::MatrixXd sigma;         ///< GP predictive standard deviation per front point
  std::vector<ExperimentalPoint> experiments;
  std::uint64_t seed = 0;
  int population = 0;
  int generations = 0;
};

ParetoReport pareto_report(const CampaignState& state, int population, int generations,
                           std::optional<std::uint64_t> seed = std::nullopt);

/// GPs on the current trainable rows, fitted with a seed derived from the
/// campaign seed and iteration; shared by slices and validation sweeps.
tsemo::Models campaign_models(const CampaignState& state);

/// Archive hypervolume of the trainable objectives against a fixed raw
/// reference point.
double archive_hypervolume(const CampaignState& state, const Eigen::Vector3d& ref);

struct ClosedLoopResult {
  CampaignState state;
  std::vector<double> hypervolume;  ///< after the initial design, then after each iteration
};

/// Raw reference for closed-loop comparisons: no product flow, a 30 nm
/// miss and one kelvin above the temperature range.
Eigen::Vector3d default_closed_loop_reference();

ClosedLoopResult run_closed_loop(const CampaignConfig& config, const VirtualLabConfig& lab, int iterations,
                                 const Eigen::Vector3d& ref = default_closed_loop_reference());

/// Hypervolume of `n` plain LHS points measured on the virtual lab.
double lhs_baseline_hypervolume(const CampaignConfig& config, const VirtualLabConfig& lab, int n,
                                const Eigen::Vector3d& ref = default_closed_loop_reference());

/// Mean and variance of one GP along one input with the others fixed.
struct GpSlice {
  Eigen::VectorXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

GpSlice gp_slice(const gp::GPModel& model, const Bounds& bounds, Eigen::Index dim, const Eigen::Vector4d& fixed,
                 int points = 101);

// ---------------------------------------------------------------------------
// Persistence (JSON lines).

std::string serialize_header(const CampaignConfig& config);
/// Header line plus journal, one JSON document per line.
std::string serialize(const CampaignState& state);
CampaignState deserialize(const std::string& text);

void save_campaign(const CampaignState& state, const std::string& path);
CampaignState load_campaign(const std::string& path);
/// Writes a new campaign file; refuses to replace an existing one unless
/// `overwrite` is set.
void create_campaign_file(const CampaignState& state, const std::string& path, bool overwrite);

/// Hyperparameters, scaling and training data; reloading rebuilds the
/// factorization and gives bit-identical predictions.
std::string serialize_model(const gp::GPModel& model);
gp::GPModel deserialize_model(const std::string& text);

}  // namespace flowopt::campaign
