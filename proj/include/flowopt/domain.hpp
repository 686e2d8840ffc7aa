#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>

namespace flowopt {

// Column order of a design vector x = [F_I, F_M, c_CTAB, T].
enum DesignDim : Eigen::Index { kFlowInitiator = 0, kFlowMonomer = 1, kCtab = 2, kTemp = 3 };
inline constexpr Eigen::Index kDesignDims = 4;

// Column order of an objective vector (all minimized).
enum ObjectiveDim : Eigen::Index { kNegProductFlow = 0, kSqRadiusDev = 1, kTempDev = 2 };
inline constexpr Eigen::Index kObjectives = 3;

/// One reactor setting. Units: mL/min, mL/min, mmol/L, degC.
struct DesignPoint {
  double f_i = 0.0;
  double f_m = 0.0;
  double c_ctab = 0.0;
  double temp = 0.0;

  Eigen::Vector4d vector() const { return {f_i, f_m, c_ctab, temp}; }
  static DesignPoint from_vector(const Eigen::Ref<const Eigen::VectorXd>& x);
  bool operator==(const DesignPoint&) const = default;
};

/// Axis-aligned box in any dimension; the reactor uses the 4-D default.
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dims() const { return lower.size(); }
  Eigen::VectorXd width() const { return upper - lower; }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 1e-12) const;
  /// Throws invalid_input unless sizes match and lower < upper everywhere.
  void validate() const;

  /// Reactor operating window (pump capacities, CTAB stability range,
  /// initiator decomposition onset to solvent evaporation).
  static Bounds reactor();
};

/// Throws invalid_input naming the offending coordinate.
void validate_design(const DesignPoint& x, const Bounds& bounds);

enum class ExclusionReason { none, high_polydispersity, high_relative_error };

std::string_view to_string(ExclusionReason r) noexcept;
ExclusionReason parse_exclusion_reason(std::string_view s);

/// Raw outcome of one run: Raman monomer fraction and DLS radius.
struct Measurement {
  double w_nipam_f = 0.0;  ///< final monomer weight fraction
  double r_h = 0.0;        ///< hydrodynamic radius, nm
  ExclusionReason excluded = ExclusionReason::none;
  std::optional<double> sigma_w;  ///< Raman model error, weight fraction
  std::optional<double> sigma_r;  ///< DLS standard deviation, nm

  bool is_excluded() const noexcept { return excluded != ExclusionReason::none; }
};

struct ObjectiveVector {
  double neg_product_flow = 0.0;  ///< -F_Product, mL/min
  double sq_radius_dev = 0.0;     ///< nm^2
  double temp_dev = 0.0;          ///< K
  std::optional<Eigen::Vector3d> sigma;

  Eigen::Vector3d vector() const { return {neg_product_flow, sq_radius_dev, temp_dev}; }
};

struct ProcessConstants {
  double c_nipam_stock = 110.6;  ///< mmol/L in the monomer feed
  double r_h_target = 100.0;     ///< nm, collapsed state
  double t_min = 60.0;           ///< degC
  double m_nipam = 113.16;       ///< g/mol
  double rho_solution = 998.0;   ///< g/L
  double rmsecv = 0.00037;       ///< Raman evaluation model error, weight fraction

  void validate() const;
};

// Initial monomer weight fraction after mixing both feeds (additive volumes).
double compute_initial_weight_fraction(const DesignPoint& x, const ProcessConstants& k);

struct ProductFlow {
  double value = 0.0;    ///< mL/min
  bool clamped = false;  ///< conversion fell outside [0, 1] and was clamped
};

ProductFlow compute_product_flow(double w0, double wf, double f_i, double f_m);
double compute_radius_objective(double r_h, double target);
double compute_temp_objective(double temp, double t_min);

/// Composes the three objectives; throws excluded_data for excluded runs.
ObjectiveVector objectives_from_measurement(const DesignPoint& x, const Measurement& m,
                                            const ProcessConstants& k);

struct PropagatedSigma {
  Eigen::Vector3d sigma = Eigen::Vector3d::Zero();
  bool missing_inputs = false;
};

/// First-order propagation of Raman and DLS errors onto the objectives.
PropagatedSigma propagate_uncertainty(const DesignPoint& x, const Measurement& m,
                                      const ProcessConstants& k);

}  // namespace flowopt
