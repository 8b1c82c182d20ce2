#include "dinr/solver/cg.hpp"

#include <cmath>

#include "dinr/errors.hpp"

namespace dinr::solver {

CgResult cg_solve(const Operator& A, const Tensor& b, Tensor x0, std::size_t max_iters, double tol,
                  KrylovMethod method) {
  nn::require_shape(x0, b.shape(), "cg initial guess");
  CgResult res;
  res.x = std::move(x0);
  Tensor r = b - A(res.x);
  res.residuals.push_back(std::sqrt(nn::squared_norm(r)));
  if (!std::isfinite(res.residuals.back())) throw NonFiniteError("cg: initial residual is not finite");
  const double stop = tol * std::sqrt(nn::squared_norm(b));
  Tensor p = r;

  if (method == KrylovMethod::ConjugateGradient) {
    double rr = nn::squared_norm(r);
    for (std::size_t k = 0; k < max_iters && res.residuals.back() > stop && rr > 0.0; ++k) {
      const Tensor Ap = A(p);
      const double alpha = rr / nn::dot(p, Ap);
      nn::axpy(alpha, p, res.x);
      nn::axpy(-alpha, Ap, r);
      const double rr_new = nn::squared_norm(r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
      res.x.check_finite("cg iterate");
      res.residuals.push_back(std::sqrt(rr));
      ++res.iterations;
    }
    return res;
  }

  Tensor Ar = A(r);
  Tensor Ap = Ar;
  double rAr = nn::dot(r, Ar);
  for (std::size_t k = 0; k < max_iters && res.residuals.back() > stop && rAr > 0.0; ++k) {
    const double alpha = rAr / nn::squared_norm(Ap);
    nn::axpy(alpha, p, res.x);
    nn::axpy(-alpha, Ap, r);
    Ar = A(r);
    const double rAr_new = nn::dot(r, Ar);
    const double beta = rAr_new / rAr;
    rAr = rAr_new;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = r[i] + beta * p[i];
      Ap[i] = Ar[i] + beta * Ap[i];
    }
    res.x.check_finite("cg iterate");
    res.residuals.push_back(std::sqrt(nn::squared_norm(r)));
    ++res.iterations;
  }
  return res;
}

}  // namespace dinr::solver
