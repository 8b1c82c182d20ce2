#pragma once

#include <cstdint>

#include "dinr/diffusion/schedule.hpp"
#include "dinr/nnkit/tensor.hpp"

namespace dinr::diffusion {

using nn::Tensor;

Tensor standard_normal(const nn::Shape& shape, std::uint64_t seed);

// sqrt(a_t) x0 + sqrt(1 - a_t) eps, 1 <= t <= T.
Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& sched);

// Deterministic-to-stochastic DDIM update towards step t-1:
//   sqrt(a_{t-1}) x_hat + sqrt(1 - a_{t-1}) (eta eps_slerp + (1 - eta) eps_theta)
// with a_0 = 1, so t = 1 returns x_hat unchanged.
Tensor ddim_step(const Tensor& x_hat, const Tensor& eps_theta, const Tensor& eps_slerp, std::size_t t, double eta,
                 const NoiseSchedule& sched);

// Spherically interpolated noise: a fixed reference draw mixed with a fresh
// draw per step along the great circle through both.
struct NoiseDraw {
  Tensor reference;
  double lambda = 0.2;  // 0 -> reference, 1 -> fresh
};

// Fresh draw for (seed, step), then slerp towards it by draw.lambda. Falls
// back to the reference when the two draws are (nearly) colinear.
Tensor slerp_noise(const NoiseDraw& draw, std::uint64_t seed, std::size_t step);
Tensor slerp(const Tensor& a, const Tensor& b, double lambda);

}  // namespace dinr::diffusion
