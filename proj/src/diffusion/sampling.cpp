#include "dinr/diffusion/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dinr/errors.hpp"
#include "dinr/rng.hpp"

namespace dinr::diffusion {

Tensor standard_normal(const nn::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (double& v : t.storage()) v = rng.normal();
  return t;
}

Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T()) throw std::out_of_range(fmt::format("q_sample: t = {} outside [1, {}]", t, sched.T()));
  nn::require_shape(eps, x0.shape(), "q_sample noise");
  const double a = sched.alpha_bar(t);
  const double sa = std::sqrt(a);
  const double sn = std::sqrt(1.0 - a);
  Tensor out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sa * x0[i] + sn * eps[i];
  return out;
}

Tensor ddim_step(const Tensor& x_hat, const Tensor& eps_theta, const Tensor& eps_slerp, std::size_t t, double eta,
                 const NoiseSchedule& sched) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument(fmt::format("ddim_step: eta = {} outside [0, 1]", eta));
  if (t < 1 || t > sched.T()) throw std::out_of_range(fmt::format("ddim_step: t = {} outside [1, {}]", t, sched.T()));
  nn::require_shape(eps_theta, x_hat.shape(), "ddim_step eps_theta");
  nn::require_shape(eps_slerp, x_hat.shape(), "ddim_step eps_slerp");
  const double a = sched.alpha_bar(t - 1);
  const double sa = std::sqrt(a);
  const double sn = std::sqrt(1.0 - a);
  Tensor out(x_hat.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sa * x_hat[i] + sn * (eta * eps_slerp[i] + (1.0 - eta) * eps_theta[i]);
  }
  return out;
}

Tensor slerp(const Tensor& a, const Tensor& b, double lambda) {
  nn::require_shape(b, a.shape(), "slerp");
  const double na = std::sqrt(nn::squared_norm(a));
  const double nb = std::sqrt(nn::squared_norm(b));
  if (na == 0.0 || nb == 0.0) return a;
  const double cosg = std::clamp(nn::dot(a, b) / (na * nb), -1.0, 1.0);
  const double gamma = std::acos(cosg);
  const double sg = std::sin(gamma);
  if (sg < 1e-8) return a;
  const double wa = std::sin((1.0 - lambda) * gamma) / sg;
  const double wb = std::sin(lambda * gamma) / sg;
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = wa * a[i] + wb * b[i];
  return out;
}

Tensor slerp_noise(const NoiseDraw& draw, std::uint64_t seed, std::size_t step) {
  if (draw.reference.empty()) throw std::invalid_argument("slerp_noise: reference noise not initialized");
  const Tensor fresh = standard_normal(draw.reference.shape(), derive_seed(seed, step));
  return slerp(draw.reference, fresh, draw.lambda);
}

}  // namespace dinr::diffusion
