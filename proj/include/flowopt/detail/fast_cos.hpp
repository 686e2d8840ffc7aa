#pragma once

#include <cstddef>

namespace flowopt::detail {

// In-place cosine over a contiguous array. Written branch-free so the
// compiler can vectorize it; accurate to a few ulp for |x| < 1e6 (three-part
// Cody-Waite reduction), degrading gracefully beyond.
void cos_inplace(double* x, std::size_t n) noexcept;

}  // namespace flowopt::detail
