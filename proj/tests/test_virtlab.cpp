#include <doctest.h>

#include <cmath>

#include "flowopt/error.hpp"
#include "flowopt/virtlab.hpp"

using namespace flowopt;

namespace {

VirtualLabConfig quiet() {
  VirtualLabConfig c;
  c.sigma_w = 0.0;
  c.sigma_r = 0.0;
  return c;
}

}  // namespace

TEST_CASE("virtual lab baseline and calibration") {
  const auto c = quiet();
  const DesignPoint base{0.5, 5.0, 0.25, 65.0};
  CHECK(simulate(base, c).r_h == doctest::Approx(100.0).epsilon(1e-14));
  // 600 s residence at 70 degC gives 90 % conversion.
  const double k70 = c.rate(70.0);
  CHECK(1 - std::exp(-k70 * 600.0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(c.residence_time(1.0, 5.0) == doctest::Approx(600.0));
  const double w0 = compute_initial_weight_fraction({0.9, 5.1, 0.25, 70.0}, c.constants);
  CHECK(simulate({0.9, 5.1, 0.25, 70.0}, c).w_nipam_f == doctest::Approx(0.1 * w0).epsilon(1e-6));
}

TEST_CASE("virtual lab monotonicity") {
  const auto c = quiet();
  for (double t = 60; t <= 80; t += 2.5) {
    for (double cc = 0.14; cc <= 0.41; cc += 0.03) {
      const DesignPoint x{0.5, 6.0, cc, t};
      DesignPoint hot = x, more_ctab = x, faster = x;
      hot.temp += 1e-3;
      more_ctab.c_ctab += 1e-4;
      faster.f_m += 1e-3;
      CHECK(c.conversion(hot) > c.conversion(x));
      CHECK(c.radius(more_ctab) < c.radius(x));
      CHECK(c.conversion(faster) < c.conversion(x));
    }
  }
}

TEST_CASE("virtual lab noise is deterministic per seed and design") {
  VirtualLabConfig c;
  c.seed = 5;
  const DesignPoint x{0.4, 9.0, 0.3, 66.0};
  const auto a = simulate(x, c);
  const auto b = simulate(x, c);
  CHECK(a.w_nipam_f == b.w_nipam_f);
  CHECK(a.r_h == b.r_h);
  c.seed = 6;
  CHECK(simulate(x, c).r_h != a.r_h);
  CHECK(a.sigma_w.value() == c.sigma_w);

  c.exclusion_probability = 1.0;
  CHECK(simulate(x, c).is_excluded());
  c.sigma_r = -1;
  CHECK_THROWS_AS(simulate(x, c), Error);
  CHECK_THROWS_AS(simulate({0.4, 30.0, 0.3, 66.0}, VirtualLabConfig{}), Error);
}
