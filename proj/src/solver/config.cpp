#include "dinr/solver/config.hpp"

#include <fmt/format.h>

#include "dinr/errors.hpp"

namespace dinr::solver {

std::string to_string(Method m) {
  switch (m) {
    case Method::Fbp: return "fbp";
    case Method::Inr: return "inr";
    case Method::Dd3ip: return "dd3ip";
    case Method::Dinr: return "dinr";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "fbp") return Method::Fbp;
  if (s == "inr") return Method::Inr;
  if (s == "dd3ip") return Method::Dd3ip;
  if (s == "dinr") return Method::Dinr;
  throw ConfigError(fmt::format("unknown method '{}' (expected fbp, inr, dd3ip or dinr)", s));
}

bool uses_diffusion(Method m) { return m == Method::Dd3ip || m == Method::Dinr; }

std::string to_string(NoisePlacement p) { return p == NoisePlacement::Noise ? "noise" : "signal"; }

NoisePlacement noise_placement_from_string(const std::string& s) {
  if (s == "noise") return NoisePlacement::Noise;
  if (s == "signal") return NoisePlacement::Signal;
  throw ConfigError(fmt::format("unknown noise placement '{}' (expected noise or signal)", s));
}

void ReconConfig::validate() const {
  if (!(omega > 0.0)) throw ConfigError(fmt::format("omega must be > 0, got {}", omega));
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError(fmt::format("eta must lie in [0, 1], got {}", eta));
  if (!(rho_ratio >= 0.0)) throw ConfigError(fmt::format("rho_ratio must be >= 0, got {}", rho_ratio));
  if (!(slerp_lambda >= 0.0 && slerp_lambda <= 1.0)) {
    throw ConfigError(fmt::format("slerp_lambda must lie in [0, 1], got {}", slerp_lambda));
  }
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(adapt_lr >= 0.0) || !(inr_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (!(mu > 0.0)) throw ConfigError(fmt::format("mu must be > 0, got {}", mu));
}

ReconConfig recon_config_from_json(const cfg::json& j, std::string_view path) {
  cfg::reject_unknown(j, path,
                      {"method", "omega", "noise_placement", "rho_ratio", "eta", "slerp_lambda", "T", "adapt_steps",
                       "adapt_lr", "inr_steps_init", "inr_steps_per_t", "inr_lr", "cg_iters", "mu", "apodization",
                       "noise_seed", "init_seed"});
  ReconConfig c;
  c.method = method_from_string(cfg::get<std::string>(j, path, "method", to_string(c.method)));
  c.omega = cfg::get(j, path, "omega", c.omega);
  c.placement = noise_placement_from_string(cfg::get<std::string>(j, path, "noise_placement", to_string(c.placement)));
  c.rho_ratio = cfg::get(j, path, "rho_ratio", c.rho_ratio);
  c.eta = cfg::get(j, path, "eta", c.eta);
  c.slerp_lambda = cfg::get(j, path, "slerp_lambda", c.slerp_lambda);
  c.T = cfg::get(j, path, "T", c.T);
  c.adapt_steps = cfg::get(j, path, "adapt_steps", c.adapt_steps);
  c.adapt_lr = cfg::get(j, path, "adapt_lr", c.adapt_lr);
  c.inr_steps_init = cfg::get(j, path, "inr_steps_init", c.inr_steps_init);
  c.inr_steps_per_t = cfg::get(j, path, "inr_steps_per_t", c.inr_steps_per_t);
  c.inr_lr = cfg::get(j, path, "inr_lr", c.inr_lr);
  c.cg_iters = cfg::get(j, path, "cg_iters", c.cg_iters);
  c.mu = cfg::get(j, path, "mu", c.mu);
  c.apodization = tomo::apodization_from_string(cfg::get<std::string>(j, path, "apodization", to_string(c.apodization)));
  c.noise_seed = cfg::get(j, path, "noise_seed", c.noise_seed);
  c.init_seed = cfg::get(j, path, "init_seed", c.init_seed);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return c;
}

cfg::json to_json(const ReconConfig& c) {
  return cfg::json{{"method", to_string(c.method)},
                   {"omega", c.omega},
                   {"noise_placement", to_string(c.placement)},
                   {"rho_ratio", c.rho_ratio},
                   {"eta", c.eta},
                   {"slerp_lambda", c.slerp_lambda},
                   {"T", c.T},
                   {"adapt_steps", c.adapt_steps},
                   {"adapt_lr", c.adapt_lr},
                   {"inr_steps_init", c.inr_steps_init},
                   {"inr_steps_per_t", c.inr_steps_per_t},
                   {"inr_lr", c.inr_lr},
                   {"cg_iters", c.cg_iters},
                   {"mu", c.mu},
                   {"apodization", to_string(c.apodization)},
                   {"noise_seed", c.noise_seed},
                   {"init_seed", c.init_seed}};
}

}  // namespace dinr::solver
