#include "flowopt/detail/fast_cos.hpp"

#include <cmath>

namespace flowopt::detail {
namespace {

// pi/2 split into three parts with trailing zero bits (fdlibm).
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624871116645580e-21;
constexpr double kPio2LoTail = 8.47842766036889956997e-32;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kRoundMagic = 6755399441055744.0;  // 1.5 * 2^52

// Minimax kernels on [-pi/4, pi/4] (fdlibm __kernel_sin / __kernel_cos).
constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;
constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

}  // namespace

void cos_inplace(double* x, std::size_t n) noexcept {
#pragma GCC ivdep
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    // nearest integer quadrant count; valid while |v| < 2^51
    const double q = (v * kTwoOverPi + kRoundMagic) - kRoundMagic;
    double r = v - q * kPio2Hi;
    r -= q * kPio2Mid;
    r -= q * kPio2Lo;
    r -= q * kPio2LoTail;
    const double z = r * r;
    const double s = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    const double c = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    // quadrant = q mod 4 in [0, 4)
    const double quad = q - 4.0 * std::floor(q * 0.25);
    const double odd = quad - 2.0 * std::floor(quad * 0.5);
    const double negate = std::floor((quad + 1.0) * 0.5) - 2.0 * std::floor((quad + 1.0) * 0.25);
    const double base = c + odd * (s - c);
    x[i] = base * (1.0 - 2.0 * negate);
  }
}

}  // namespace flowopt::detail
