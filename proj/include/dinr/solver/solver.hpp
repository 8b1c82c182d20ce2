#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dinr/diffusion/denoiser.hpp"
#include "dinr/inr/inr.hpp"
#include "dinr/solver/cg.hpp"
#include "dinr/solver/config.hpp"
#include "dinr/tomo/geometry.hpp"
#include "dinr/tomo/projector.hpp"

namespace dinr::solver {

using tomo::Sinogram;
using tomo::Volume;

// Salts for derive_seed: kInrInit and kInitNoise from cfg.init_seed,
// kReference (the slerp reference draw) from cfg.noise_seed.
enum SeedSalt : std::uint64_t { kInrInit = 1, kInitNoise = 2, kReference = 3 };

// Attenuation [0, 1] <-> diffusion network range [-1, 1].
Tensor to_network_range(const Tensor& att);
Tensor to_attenuation(const Tensor& net);

struct StepLog {
  std::size_t t = 0;
  double adapt_loss = 0.0;        // at the incoming weights, before adaptation
  double adapt_loss_final = 0.0;  // after the last adaptation step
  double data_term = 0.0;
  double prox_term = 0.0;
  std::optional<double> psnr;     // of this step's estimate, if truth was given
  std::uint64_t hash_in = 0;      // denoiser weights entering the step
  std::uint64_t hash_out = 0;     // and leaving it
};

struct ReconResult {
  Volume x0;  // attenuation units, unclamped
  std::vector<StepLog> log;
  double rho = 0.0;
  double wall_time = 0.0;
  ReconConfig config;
};

// x_T in network range; fbp_net is the FBP volume already mapped to [-1, 1].
Tensor init_xT(const Tensor& fbp_net, double alpha_bar_T, double omega, const Tensor& eps,
               NoisePlacement placement = NoisePlacement::Noise);

// `steps` Adam iterations on MSE(A att(D(x_t)), y) from the current weights
// (state carried in `adam`). Returns the loss before and after, plus the
// denoised estimate and predicted noise at the final weights.
struct AdaptResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  Tensor x_hat;  // network range
  Tensor eps;
};
AdaptResult adapt_weights(diffusion::DenoiserModel& model, nn::AdamState& adam, const Tensor& x_t, double alpha_bar,
                          double train_step, const tomo::Projector& A, const Tensor& y, std::size_t steps, double lr);

// Solves (A^T A + mu I) x = A^T y + mu x_hat from x_hat.
CgResult data_consistency(const tomo::Projector& A, const Tensor& y, const Tensor& x_hat, double mu,
                          std::size_t iters, KrylovMethod method = KrylovMethod::ConjugateResidual);

struct ReconInputs {
  const Sinogram* y = nullptr;
  const Volume* truth = nullptr;  // optional, only for logging PSNR
  double data_range = 1.0;
};

ReconResult fbp_reconstruct(const ReconInputs& in, const ReconConfig& cfg);
ReconResult inr_reconstruct(const ReconInputs& in, const ReconConfig& cfg);
// The model is adapted in place; pass a copy to keep the pretrained weights.
ReconResult dinr_reconstruct(const ReconInputs& in, diffusion::DenoiserModel& model, const ReconConfig& cfg);
ReconResult dd3ip_reconstruct(const ReconInputs& in, diffusion::DenoiserModel& model, const ReconConfig& cfg);

// Dispatch on cfg.method. Diffusion methods load a fresh copy of the
// weights from `weights`, which must exist.
ReconResult reconstruct(const ReconInputs& in, const ReconConfig& cfg, const std::filesystem::path& weights = {});

// Per-step log as CSV: t,adapt_loss,data_term,prox_term,psnr
void write_log_csv(const std::filesystem::path& path, const std::vector<StepLog>& log);

}  // namespace dinr::solver
