#pragma once

#include <functional>
#include <vector>

#include "dinr/nnkit/tensor.hpp"

namespace dinr::solver {

using nn::Tensor;
using Operator = std::function<Tensor(const Tensor&)>;

enum class KrylovMethod {
  ConjugateGradient,
  // Minimizes the residual norm over the same Krylov space, so the residual
  // history is non-increasing.
  ConjugateResidual,
};

struct CgResult {
  Tensor x;
  std::vector<double> residuals;  // ||b - A x_k||, k = 0..iterations
  std::size_t iterations = 0;
};

// Solves A x = b for symmetric positive definite A starting from x0.
// Stops after `max_iters` or once the residual falls below tol * ||b||.
// Throws NonFiniteError if an iterate goes non-finite.
CgResult cg_solve(const Operator& A, const Tensor& b, Tensor x0, std::size_t max_iters, double tol = 0.0,
                  KrylovMethod method = KrylovMethod::ConjugateResidual);

}  // namespace dinr::solver
