#pragma once

#include <cstdint>
#include <string>

#include "dinr/json_fields.hpp"
#include "dinr/tomo/projector.hpp"

namespace dinr::solver {

enum class Method { Fbp, Inr, Dd3ip, Dinr };
std::string to_string(Method m);
Method method_from_string(const std::string& s);
bool uses_diffusion(Method m);

// Where omega enters the x_T initialization:
//   Noise:  sqrt(a_T) fbp + sqrt(1 - a_T) eps * omega
//   Signal: sqrt(a_T) fbp / omega + sqrt(1 - a_T) eps
enum class NoisePlacement { Noise, Signal };
std::string to_string(NoisePlacement p);
NoisePlacement noise_placement_from_string(const std::string& s);

struct ReconConfig {
  Method method = Method::Dinr;
  double omega = 0.2;
  NoisePlacement placement = NoisePlacement::Noise;
  double rho_ratio = 1e-5;
  double eta = 0.0;
  double slerp_lambda = 0.2;
  std::size_t T = 25;
  std::size_t adapt_steps = 10;
  double adapt_lr = 1e-4;
  std::size_t inr_steps_init = 200;
  std::size_t inr_steps_per_t = 50;
  double inr_lr = 1e-4;
  std::size_t cg_iters = 50;
  double mu = 1.0;
  tomo::Apodization apodization = tomo::Apodization::RamLak;
  std::uint64_t noise_seed = 1;  // slerp noise
  std::uint64_t init_seed = 2;   // x_T noise and INR initialization

  void validate() const;
};

// Missing fields keep their defaults; unknown fields are rejected.
ReconConfig recon_config_from_json(const cfg::json& j, std::string_view path = "recon");
cfg::json to_json(const ReconConfig& c);

}  // namespace dinr::solver
