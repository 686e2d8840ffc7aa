#include "flowopt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowopt/error.hpp"

namespace flowopt {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::excluded_data: return "excluded-data";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::campaign_complete: return "campaign-complete";
  }
  return "unknown";
}

DesignPoint DesignPoint::from_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == kDesignDims, ErrorKind::invalid_input, "design vector must have 4 entries");
  return {x(kFlowInitiator), x(kFlowMonomer), x(kCtab), x(kTemp)};
}

bool Bounds::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  if (x.size() != dims()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

void Bounds::validate() const {
  require(lower.size() == upper.size() && lower.size() > 0, ErrorKind::invalid_input,
          "bounds must be non-empty vectors of equal length");
  for (Eigen::Index k = 0; k < lower.size(); ++k) {
    require(std::isfinite(lower(k)) && std::isfinite(upper(k)) && lower(k) < upper(k), ErrorKind::invalid_input,
            "bounds require lower < upper in dimension " + std::to_string(k));
  }
}

Bounds Bounds::reactor() {
  Bounds b;
  b.lower = Eigen::Vector4d(0.1, 2.0, 0.14, 60.0);
  b.upper = Eigen::Vector4d(0.9, 18.0, 0.41, 80.0);
  return b;
}

void validate_design(const DesignPoint& x, const Bounds& bounds) {
  static constexpr const char* kNames[] = {"f_i", "f_m", "c_ctab", "temp"};
  require(bounds.dims() == kDesignDims, ErrorKind::invalid_input, "design bounds must be 4-dimensional");
  const Eigen::Vector4d v = x.vector();
  for (Eigen::Index k = 0; k < kDesignDims; ++k) {
    if (!(v(k) >= bounds.lower(k) && v(k) <= bounds.upper(k))) {
      std::ostringstream msg;
      msg << kNames[k] << " = " << v(k) << " outside [" << bounds.lower(k) << ", " << bounds.upper(k) << "]";
      fail(ErrorKind::invalid_input, msg.str());
    }
  }
}

std::string_view to_string(ExclusionReason r) noexcept {
  switch (r) {
    case ExclusionReason::none: return "none";
    case ExclusionReason::high_polydispersity: return "high_polydispersity";
    case ExclusionReason::high_relative_error: return "high_relative_error";
  }
  return "none";
}

ExclusionReason parse_exclusion_reason(std::string_view s) {
  if (s.empty() || s == "none") return ExclusionReason::none;
  if (s == "high_polydispersity" || s == "pdi") return ExclusionReason::high_polydispersity;
  if (s == "high_relative_error" || s == "error") return ExclusionReason::high_relative_error;
  fail(ErrorKind::invalid_input, "unknown exclusion reason '" + std::string(s) + "'");
}

void ProcessConstants::validate() const {
  require(c_nipam_stock > 0 && r_h_target > 0 && t_min > 0 && m_nipam > 0 && rho_solution > 0 && rmsecv > 0,
          ErrorKind::invalid_input, "process constants must be strictly positive");
}

double compute_initial_weight_fraction(const DesignPoint& x, const ProcessConstants& k) {
  k.validate();
  const double total = x.f_i + x.f_m;
  require(total > 0.0 && x.f_i >= 0.0 && x.f_m >= 0.0, ErrorKind::invalid_input,
          "total feed flow must be positive");
  // mmol/L -> g/L of monomer in the stock, diluted by the initiator feed.
  const double stock_mass_conc = k.c_nipam_stock * 1e-3 * k.m_nipam;
  return stock_mass_conc * (x.f_m / total) / k.rho_solution;
}

ProductFlow compute_product_flow(double w0, double wf, double f_i, double f_m) {
  require(w0 > 0.0, ErrorKind::invalid_input, "initial weight fraction must be positive");
  require(wf >= 0.0, ErrorKind::invalid_input, "final weight fraction must be non-negative");
  require(f_i >= 0.0 && f_m >= 0.0, ErrorKind::invalid_input, "flows must be non-negative");
  const double raw = (w0 - wf) / w0;
  const double conversion = std::clamp(raw, 0.0, 1.0);
  return {conversion * (f_i + f_m), conversion != raw};
}

double compute_radius_objective(double r_h, double target) {
  require(r_h > 0.0 && target > 0.0, ErrorKind::invalid_input, "radius and target must be positive");
  const double dev = r_h - target;
  return dev * dev;
}

double compute_temp_objective(double temp, double t_min) {
  require(temp >= t_min, ErrorKind::invalid_input, "temperature below the minimum allowable temperature");
  return temp - t_min;
}

ObjectiveVector objectives_from_measurement(const DesignPoint& x, const Measurement& m,
                                            const ProcessConstants& k) {
  if (m.is_excluded()) {
    fail(ErrorKind::excluded_data, "measurement excluded: " + std::string(to_string(m.excluded)));
  }
  const double w0 = compute_initial_weight_fraction(x, k);
  ObjectiveVector y;
  y.neg_product_flow = -compute_product_flow(w0, m.w_nipam_f, x.f_i, x.f_m).value;
  y.sq_radius_dev = compute_radius_objective(m.r_h, k.r_h_target);
  y.temp_dev = compute_temp_objective(x.temp, k.t_min);
  return y;
}

PropagatedSigma propagate_uncertainty(const DesignPoint& x, const Measurement& m, const ProcessConstants& k) {
  PropagatedSigma out;
  if (!m.sigma_w || !m.sigma_r) {
    out.missing_inputs = true;
    return out;
  }
  const double w0 = compute_initial_weight_fraction(x, k);
  out.sigma(kNegProductFlow) = (x.f_i + x.f_m) / w0 * *m.sigma_w;
  out.sigma(kSqRadiusDev) = 2.0 * std::abs(m.r_h - k.r_h_target) * *m.sigma_r;
  // Temperature is a setpoint, not a measurement.
  out.sigma(kTempDev) = 0.0;
  return out;
}

}  // namespace flowopt
