#pragma once

#include <cstdint>

#include "flowopt/domain.hpp"

namespace flowopt {

/// Synthetic reactor used in place of hardware. First-order conversion with
/// an Arrhenius rate over the residence time, and a power-law radius in
/// surfactant concentration with a linear temperature term.
struct VirtualLabConfig {
  double activation_temp = 10000.0;  ///< E_a / R, K
  /// Rate prefactor, 1/s. Default gives 90 % conversion at 70 degC and 600 s.
  double prefactor = 1.7385068e10;
  double reactor_volume = 60.0;  ///< mL
  double r0 = 100.0;             ///< nm at c_ref and 65 degC
  double c_ref = 0.25;           ///< mmol/L
  double alpha = 0.452;
  double beta = 0.005;  ///< 1/K
  double sigma_w = 0.00037;
  double sigma_r = 2.0;
  double exclusion_probability = 0.0;
  ProcessConstants constants;
  std::uint64_t seed = 0;

  void validate() const;
  /// Rate constant at `temp` degC, 1/s.
  double rate(double temp) const;
  /// Residence time in seconds at the given flows (mL/min).
  double residence_time(double f_i, double f_m) const;
  /// Noise-free conversion in [0, 1].
  double conversion(const DesignPoint& x) const;
  /// Noise-free radius, nm.
  double radius(const DesignPoint& x) const;
};

/// Deterministic per (config.seed, x).
Measurement simulate(const DesignPoint& x, const VirtualLabConfig& cfg);

}  // namespace flowopt
