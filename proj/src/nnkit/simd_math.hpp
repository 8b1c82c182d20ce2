#pragma once

#include <cstddef>

namespace dinr::nn::detail {

// out[i] = sin(w0 * in[i]); vectorized through libmvec when enabled.
void sin_scaled(const double* in, double* out, std::size_t n, double w0);
// out[i] += w0 * cos(w0 * in[i]) * g[i]
void dsin_scaled(const double* in, const double* g, double* out, std::size_t n, double w0);

}  // namespace dinr::nn::detail
