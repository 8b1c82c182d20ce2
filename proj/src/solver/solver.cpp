#include "dinr/solver/solver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dinr/diffusion/sampling.hpp"
#include "dinr/errors.hpp"
#include "dinr/metrics/metrics.hpp"
#include "dinr/nnkit/ops.hpp"
#include "dinr/rng.hpp"

namespace dinr::solver {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const Sinogram& require_y(const ReconInputs& in) {
  if (in.y == nullptr) throw std::invalid_argument("reconstruction needs a sinogram");
  return *in.y;
}

std::optional<double> step_psnr(const ReconInputs& in, const Tensor& att) {
  if (in.truth == nullptr) return std::nullopt;
  return metrics::psnr(att, in.truth->data, in.data_range);
}

// Shared skeleton of the two diffusion solvers: x_T initialization, the
// reverse loop with per-step weight adaptation, and the final t == 1
// branch. `dis` turns (t, x_hat in attenuation units) into the step's
// posterior-mean estimate (attenuation units) and fills the log terms.
using Dis = std::function<Tensor(std::size_t t, const Volume& x_hat, StepLog& entry)>;

ReconResult diffusion_loop(const ReconInputs& in, diffusion::DenoiserModel& model, const ReconConfig& cfg,
                           const Volume& fbp_vol, const tomo::Projector& A, const Dis& dis) {
  const auto& y = require_y(in).data;
  const auto sched = diffusion::stride_schedule(model.schedule, cfg.T);
  const auto& shape = fbp_vol.data.shape();

  const Tensor eps0 = diffusion::standard_normal(shape, derive_seed(cfg.init_seed, kInitNoise));
  Tensor x = init_xT(to_network_range(fbp_vol.data), sched.alpha_bar(cfg.T), cfg.omega, eps0, cfg.placement);
  diffusion::NoiseDraw draw{diffusion::standard_normal(shape, derive_seed(cfg.noise_seed, kReference)),
                            cfg.slerp_lambda};

  ReconResult res;
  res.config = cfg;
  nn::AdamState adam;
  for (std::size_t t = cfg.T; t >= 1; --t) {
    StepLog entry;
    entry.t = t;
    try {
      entry.hash_in = model.params.hash();
      auto ad = adapt_weights(model, adam, x, sched.alpha_bar(t), sched.train_step(t), A, y, cfg.adapt_steps,
                              cfg.adapt_lr);
      entry.hash_out = model.params.hash();
      entry.adapt_loss = ad.initial_loss;
      entry.adapt_loss_final = ad.final_loss;

      const Volume x_hat(to_attenuation(ad.x_hat));
      Tensor est = dis(t, x_hat, entry);
      entry.psnr = step_psnr(in, est);

      if (t == 1) {
        res.x0 = Volume(std::move(est));
      } else {
        const Tensor eps_s = diffusion::slerp_noise(draw, cfg.noise_seed, t);
        x = diffusion::ddim_step(to_network_range(est), ad.eps, eps_s, t, cfg.eta, sched);
      }
    } catch (const Error& e) {
      throw DivergenceError(fmt::format("{} failed at t = {}: {}", to_string(cfg.method), t, e.what()));
    }
    res.log.push_back(entry);
  }
  return res;
}
}  // namespace

Tensor to_network_range(const Tensor& att) {
  Tensor out(att.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * att[i] - 1.0;
  return out;
}

Tensor to_attenuation(const Tensor& net) {
  Tensor out(net.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * net[i] + 0.5;
  return out;
}

Tensor init_xT(const Tensor& fbp_net, double alpha_bar_T, double omega, const Tensor& eps, NoisePlacement placement) {
  if (!(omega > 0.0)) throw std::invalid_argument(fmt::format("omega must be > 0, got {}", omega));
  nn::require_shape(eps, fbp_net.shape(), "x_T noise");
  const double sa = std::sqrt(alpha_bar_T);
  const double sn = std::sqrt(1.0 - alpha_bar_T);
  Tensor out(fbp_net.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = placement == NoisePlacement::Noise ? sa * fbp_net[i] + sn * eps[i] * omega
                                                : sa * fbp_net[i] / omega + sn * eps[i];
  }
  return out;
}

AdaptResult adapt_weights(diffusion::DenoiserModel& model, nn::AdamState& adam, const Tensor& x_t, double alpha_bar,
                          double train_step, const tomo::Projector& A, const Tensor& y, std::size_t steps, double lr) {
  nn::AdamOptions opt;
  opt.lr = lr;
  AdaptResult res;
  // One extra pass after the last update gives x_hat at the adapted weights.
  for (std::size_t k = 0; k <= steps; ++k) {
    nn::Graph g;
    nn::Var eps;
    auto x_hat = diffusion::denoise(g, model, g.constant(x_t), alpha_bar, train_step, &eps);
    auto att = nn::affine(x_hat, 0.5, 0.5);
    auto proj = nn::linear_map(
        att, [&A](const Tensor& v) { return A.forward(v); }, [&A](const Tensor& s) { return A.adjoint(s); });
    auto loss = nn::mse(proj, g.constant(y));
    const double l = loss.value().item();
    if (!std::isfinite(l)) throw DivergenceError(fmt::format("adaptation loss is {} after {} steps", l, k));
    if (k == 0) res.initial_loss = l;
    if (k == steps || lr == 0.0) {
      res.final_loss = l;
      res.x_hat = x_hat.value();
      res.eps = eps.value();
      break;
    }
    model.params.zero_grad();
    g.backward(loss);
    nn::adam_step(model.params, adam, opt);
  }
  return res;
}

CgResult data_consistency(const tomo::Projector& A, const Tensor& y, const Tensor& x_hat, double mu,
                          std::size_t iters, KrylovMethod method) {
  if (!(mu > 0.0)) throw std::invalid_argument(fmt::format("mu must be > 0, got {}", mu));
  Tensor rhs = A.adjoint(y);
  nn::axpy(mu, x_hat, rhs);
  auto normal = [&A, mu](const Tensor& v) {
    Tensor out = A.adjoint(A.forward(v));
    nn::axpy(mu, v, out);
    return out;
  };
  return cg_solve(normal, rhs, x_hat, iters, 0.0, method);
}

ReconResult fbp_reconstruct(const ReconInputs& in, const ReconConfig& cfg) {
  const auto start = Clock::now();
  ReconResult res;
  res.config = cfg;
  res.x0 = tomo::fbp(require_y(in), cfg.apodization);
  res.wall_time = seconds_since(start);
  return res;
}

ReconResult inr_reconstruct(const ReconInputs& in, const ReconConfig& cfg) {
  const auto start = Clock::now();
  const auto& sino = require_y(in);
  const tomo::Projector A(sino.geometry);
  const Volume fbp_vol = tomo::fbp(sino, cfg.apodization);
  const auto grid = inr::CoordinateGrid::like(fbp_vol);
  auto model = inr::InrModel::create(inr::InrModel::default_spec(), derive_seed(cfg.init_seed, kInrInit));
  const std::size_t steps = cfg.inr_steps_init + cfg.T * cfg.inr_steps_per_t;
  auto fit = inr::fit_inr(model, grid, A, sino.data, fbp_vol, nullptr, 0.0, steps, cfg.inr_lr);
  ReconResult res;
  res.config = cfg;
  res.x0 = std::move(fit.output);
  res.wall_time = seconds_since(start);
  return res;
}

ReconResult dinr_reconstruct(const ReconInputs& in, diffusion::DenoiserModel& model, const ReconConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const auto& sino = require_y(in);
  const tomo::Projector A(sino.geometry);
  const Volume fbp_vol = tomo::fbp(sino, cfg.apodization);
  const auto grid = inr::CoordinateGrid::like(fbp_vol);

  auto inr_model = inr::InrModel::create(inr::InrModel::default_spec(), derive_seed(cfg.init_seed, kInrInit));
  inr::fit_inr(inr_model, grid, A, sino.data, fbp_vol, nullptr, 0.0, cfg.inr_steps_init, cfg.inr_lr);

  bool rho_resolved = false;
  double rho = 0.0;
  auto dis = [&](std::size_t, const Volume& x_hat, StepLog& entry) {
    // no INR steps: the chain runs straight through the denoiser's estimate
    if (cfg.inr_steps_per_t == 0) return x_hat.data;
    if (!rho_resolved) {
      nn::Graph g;
      const auto terms = inr::proximal_loss(g, inr_model, grid, A, sino.data, fbp_vol, &x_hat, 0.0);
      rho = inr::resolve_rho(terms.data, terms.prox, cfg.rho_ratio);
      rho_resolved = true;
    }
    auto fit = inr::fit_inr(inr_model, grid, A, sino.data, fbp_vol, &x_hat, rho, cfg.inr_steps_per_t, cfg.inr_lr);
    entry.data_term = fit.data;
    entry.prox_term = fit.prox;
    return std::move(fit.output.data);
  };
  auto res = diffusion_loop(in, model, cfg, fbp_vol, A, dis);
  res.rho = rho;
  res.wall_time = seconds_since(start);
  return res;
}

ReconResult dd3ip_reconstruct(const ReconInputs& in, diffusion::DenoiserModel& model, const ReconConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const auto& sino = require_y(in);
  const tomo::Projector A(sino.geometry);
  const Volume fbp_vol = tomo::fbp(sino, cfg.apodization);

  auto dis = [&](std::size_t, const Volume& x_hat, StepLog& entry) {
    auto cg = data_consistency(A, sino.data, x_hat.data, cfg.mu, cfg.cg_iters);
    const Tensor r = A.forward(cg.x) - sino.data;
    entry.data_term = nn::squared_norm(r) / static_cast<double>(r.size());
    const Tensor d = cg.x - x_hat.data;
    entry.prox_term = nn::squared_norm(d) / static_cast<double>(d.size());
    return std::move(cg.x);
  };
  auto res = diffusion_loop(in, model, cfg, fbp_vol, A, dis);
  res.wall_time = seconds_since(start);
  return res;
}

ReconResult reconstruct(const ReconInputs& in, const ReconConfig& cfg, const std::filesystem::path& weights) {
  cfg.validate();
  switch (cfg.method) {
    case Method::Fbp: return fbp_reconstruct(in, cfg);
    case Method::Inr: return inr_reconstruct(in, cfg);
    case Method::Dd3ip:
    case Method::Dinr: {
      if (weights.empty() || !std::filesystem::exists(weights)) {
        throw ConfigError(fmt::format("method {} needs pretrained weights; '{}' not found", to_string(cfg.method),
                                      weights.string()));
      }
      auto model = diffusion::load_denoiser(weights);
      return cfg.method == Method::Dinr ? dinr_reconstruct(in, model, cfg) : dd3ip_reconstruct(in, model, cfg);
    }
  }
  throw std::logic_error("unhandled method");
}

void write_log_csv(const std::filesystem::path& path, const std::vector<StepLog>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path.string()));
  out << "t,adapt_loss,data_term,prox_term,psnr\n";
  for (const auto& e : log) {
    out << fmt::format("{},{:.9g},{:.9g},{:.9g},{}\n", e.t, e.adapt_loss, e.data_term, e.prox_term,
                       e.psnr ? metrics::format_metric(*e.psnr) : "");
  }
}

}  // namespace dinr::solver
