#pragma once

#include <cstdint>
#include <optional>

#include "dinr/nnkit/adam.hpp"
#include "dinr/nnkit/graph.hpp"
#include "dinr/nnkit/layers.hpp"
#include "dinr/tomo/geometry.hpp"
#include "dinr/tomo/projector.hpp"

namespace dinr::inr {

using nn::Tensor;
using tomo::Volume;

// Normalized lattice coordinates, one row (x, y, z) per voxel in volume
// order (slice, row, col). x follows columns, y rows, z slices; each axis
// spans [-1, 1] symmetrically (z = 0 for a single slice).
struct CoordinateGrid {
  Tensor points;  // (S*H*W, 3)
  std::size_t slices = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  static CoordinateGrid make(std::size_t slices, std::size_t height, std::size_t width);
  static CoordinateGrid like(const Volume& v) { return make(v.slices(), v.size(), v.size()); }
  std::size_t count() const { return slices * height * width; }
};

// SIREN over (x, y, z, fbp) with its optimizer state, which is carried
// across fits so timesteps warm-start from each other.
struct InrModel {
  nn::ParamSet params;
  nn::MlpSpec spec;
  nn::AdamState adam;

  // 4 -> 128 -> 128 -> 128 -> 1, sine, w0 = 30.
  static nn::MlpSpec default_spec();
  static InrModel create(nn::MlpSpec spec, std::uint64_t seed);
  void validate() const;
};

// (S, H, W) output of F(S, A*y).
nn::Var inr_forward(nn::Graph& g, InrModel& model, const CoordinateGrid& grid, const Volume& fbp_vol);
Volume inr_forward(InrModel& model, const CoordinateGrid& grid, const Volume& fbp_vol);

struct LossTerms {
  nn::Var total;
  nn::Var output;  // F output volume
  double data = 0.0;
  double prox = 0.0;  // reported even when rho == 0 and x_hat is given
};

// MSE(A F, y) + rho * MSE(x_hat, F). With rho == 0 the total is the data
// term node itself and x_hat does not enter the graph. x_hat is in
// attenuation units.
LossTerms proximal_loss(nn::Graph& g, InrModel& model, const CoordinateGrid& grid, const tomo::Projector& A,
                        const Tensor& y, const Volume& fbp_vol, const Volume* x_hat, double rho);

struct FitResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double data = 0.0;  // terms at the final weights
  double prox = 0.0;
  Volume output;      // F output at the final weights
};

// `steps` Adam iterations from the current weights. lr == 0 leaves the
// weights untouched. Warns if the final loss exceeds the initial one.
FitResult fit_inr(InrModel& model, const CoordinateGrid& grid, const tomo::Projector& A, const Tensor& y,
                  const Volume& fbp_vol, const Volume* x_hat, double rho, std::size_t steps, double lr);

// rho such that rho * prox == ratio * data.
double resolve_rho(double data_term, double prox_term, double ratio_target);

}  // namespace dinr::inr
