// Built with -ffast-math when DINR_VECTOR_MATH is on so GCC can call the
// glibc vector variants of sin/cos. Nothing else belongs in this file.
#include "simd_math.hpp"

#include <cmath>

namespace dinr::nn::detail {

void sin_scaled(const double* __restrict in, double* __restrict out, std::size_t n, double w0) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(w0 * in[i]);
}

void dsin_scaled(const double* __restrict in, const double* __restrict g, double* __restrict out, std::size_t n,
                 double w0) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) out[i] += w0 * std::cos(w0 * in[i]) * g[i];
}

}  // namespace dinr::nn::detail
