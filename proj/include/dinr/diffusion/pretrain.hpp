#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dinr/diffusion/denoiser.hpp"
#include "dinr/tomo/geometry.hpp"

namespace dinr::diffusion {

struct PretrainOptions {
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
};

struct PretrainReport {
  std::vector<double> epoch_loss;  // mean per-sample loss of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// DDPM epsilon-matching on `dataset` (volumes already in network range).
// Each sample gets its own uniformly drawn training step; gradients are
// accumulated over a mini-batch in dataset order, then one Adam update.
// Throws DivergenceError if the loss goes non-finite.
PretrainReport pretrain(DenoiserModel& model, const std::vector<tomo::Volume>& dataset, const PretrainOptions& opt,
                        const EpochCallback& on_epoch = {});

}  // namespace dinr::diffusion
