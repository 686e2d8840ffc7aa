#include "flowopt/virtlab.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "flowopt/error.hpp"
#include "flowopt/rng.hpp"

namespace flowopt {

void VirtualLabConfig::validate() const {
  require(activation_temp > 0 && prefactor > 0 && reactor_volume > 0, ErrorKind::invalid_input,
          "virtual lab kinetics constants must be positive");
  require(r0 > 0 && c_ref > 0, ErrorKind::invalid_input, "virtual lab radius constants must be positive");
  require(sigma_w >= 0 && sigma_r >= 0, ErrorKind::invalid_input, "noise levels must be non-negative");
  require(exclusion_probability >= 0 && exclusion_probability <= 1, ErrorKind::invalid_input,
          "exclusion probability must lie in [0, 1]");
  constants.validate();
}

double VirtualLabConfig::rate(double temp) const { return prefactor * std::exp(-activation_temp / (temp + 273.15)); }

double VirtualLabConfig::residence_time(double f_i, double f_m) const {
  const double flow = f_i + f_m;
  require(flow > 0, ErrorKind::invalid_input, "total flow must be positive");
  return 60.0 * reactor_volume / flow;
}

double VirtualLabConfig::conversion(const DesignPoint& x) const {
  return 1.0 - std::exp(-rate(x.temp) * residence_time(x.f_i, x.f_m));
}

double VirtualLabConfig::radius(const DesignPoint& x) const {
  return r0 * std::pow(c_ref / x.c_ctab, alpha) * (1.0 + beta * (x.temp - 65.0));
}

Measurement simulate(const DesignPoint& x, const VirtualLabConfig& cfg) {
  cfg.validate();
  validate_design(x, Bounds::reactor());
  std::uint64_t h = cfg.seed;
  for (const double v : {x.f_i, x.f_m, x.c_ctab, x.temp}) h = mix_seed(h ^ std::bit_cast<std::uint64_t>(v));
  Rng rng(h);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double w0 = compute_initial_weight_fraction(x, cfg.constants);
  Measurement m;
  m.w_nipam_f = std::max(0.0, w0 * (1.0 - cfg.conversion(x)) + cfg.sigma_w * normal(rng));
  m.r_h = std::max(1.0, cfg.radius(x) + cfg.sigma_r * normal(rng));
  m.sigma_w = cfg.sigma_w;
  m.sigma_r = cfg.sigma_r;
  if (unit(rng) < cfg.exclusion_probability) m.excluded = ExclusionReason::high_polydispersity;
  return m;
}

}  // namespace flowopt
