#pragma once

#include <filesystem>

#include "dinr/diffusion/schedule.hpp"
#include "dinr/nnkit/graph.hpp"
#include "dinr/nnkit/layers.hpp"

namespace dinr::diffusion {

using nn::Tensor;

// Noise-predicting convolutional denoiser eps_theta(x_t, t) together with
// the schedule it was trained under.
struct DenoiserModel {
  nn::ParamSet params;
  nn::ConvSpec arch;
  NoiseSchedule schedule;

  // 1 -> 16 -> 32 -> 32 -> 16 -> 1, 3x3 kernels.
  static nn::ConvSpec default_arch();
  static DenoiserModel create(nn::ConvSpec arch, NoiseSchedule schedule, std::uint64_t seed);

  void validate() const;
};

// x: (S, H, W) single-channel slices, evaluated as a batch of S.
// `train_step` is the schedule's training index for the current t.
nn::Var predict_noise(nn::Graph& g, DenoiserModel& model, nn::Var x, double train_step);
Tensor predict_noise(DenoiserModel& model, const Tensor& x, double train_step);

// Posterior-mean estimate x0 = (x_t - sqrt(1 - a_t) eps) / sqrt(a_t).
nn::Var denoise(nn::Graph& g, DenoiserModel& model, nn::Var x_t, double alpha_bar, double train_step,
                nn::Var* eps_out = nullptr);

// Weights file: the ParamSet block ("DINRW001" ...) followed by tagged
// trailer blocks "ARCH" (u32 length + descriptor text) and "SCHD"
// (serialized training schedule).
void save_denoiser(const std::filesystem::path& path, const DenoiserModel& model);
DenoiserModel load_denoiser(const std::filesystem::path& path);

}  // namespace dinr::diffusion
