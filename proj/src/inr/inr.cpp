#include "dinr/inr/inr.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dinr/errors.hpp"
#include "dinr/nnkit/ops.hpp"
#include "dinr/rng.hpp"

namespace dinr::inr {

namespace {
double axis_coord(std::size_t i, std::size_t n) {
  if (n <= 1) return 0.0;
  return (2.0 * static_cast<double>(i) - static_cast<double>(n - 1)) / static_cast<double>(n - 1);
}

void require_grid(const CoordinateGrid& grid, const Volume& v, const char* what) {
  const auto& s = v.data.shape();
  if (s.size() != 3 || s[0] != grid.slices || s[1] != grid.height || s[2] != grid.width) {
    throw ShapeError(fmt::format("{} shape {} does not match grid ({}, {}, {})", what, nn::shape_string(s),
                                 grid.slices, grid.height, grid.width));
  }
}
}  // namespace

CoordinateGrid CoordinateGrid::make(std::size_t slices, std::size_t height, std::size_t width) {
  CoordinateGrid g;
  g.slices = slices;
  g.height = height;
  g.width = width;
  g.points = Tensor({slices * height * width, 3});
  std::size_t p = 0;
  for (std::size_t s = 0; s < slices; ++s) {
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c, ++p) {
        g.points[3 * p] = axis_coord(c, width);
        g.points[3 * p + 1] = axis_coord(r, height);
        g.points[3 * p + 2] = axis_coord(s, slices);
      }
    }
  }
  return g;
}

nn::MlpSpec InrModel::default_spec() {
  nn::MlpSpec s;
  s.widths = {4, 128, 128, 128, 1};
  s.activation = nn::Activation::Sine;
  s.w0 = 30.0;
  return s;
}

InrModel InrModel::create(nn::MlpSpec spec, std::uint64_t seed) {
  InrModel m;
  m.spec = std::move(spec);
  nn::add_mlp_params(m.params, m.spec);
  Rng rng(seed);
  nn::init_siren(m.params, m.spec, rng);
  m.validate();
  return m;
}

void InrModel::validate() const {
  if (spec.widths.size() < 2 || spec.widths.front() != 4 || spec.widths.back() != 1) {
    throw ShapeError("INR must map 4 inputs (x, y, z, fbp) to 1 output");
  }
  nn::ParamSet expected;
  nn::add_mlp_params(expected, spec);
  if (expected.layout() != params.layout()) throw ShapeError("INR parameters do not match its layer spec");
}

nn::Var inr_forward(nn::Graph& g, InrModel& model, const CoordinateGrid& grid, const Volume& fbp_vol) {
  require_grid(grid, fbp_vol, "fbp volume");
  const std::size_t n = grid.count();
  Tensor in({n, 4});
  for (std::size_t p = 0; p < n; ++p) {
    in[4 * p] = grid.points[3 * p];
    in[4 * p + 1] = grid.points[3 * p + 1];
    in[4 * p + 2] = grid.points[3 * p + 2];
    in[4 * p + 3] = fbp_vol.data[p];
  }
  auto out = nn::forward_mlp(g, model.params, g.constant(std::move(in)), model.spec);
  return nn::reshape(out, {grid.slices, grid.height, grid.width});
}

Volume inr_forward(InrModel& model, const CoordinateGrid& grid, const Volume& fbp_vol) {
  nn::Graph g;
  return Volume(inr_forward(g, model, grid, fbp_vol).value());
}

LossTerms proximal_loss(nn::Graph& g, InrModel& model, const CoordinateGrid& grid, const tomo::Projector& A,
                        const Tensor& y, const Volume& fbp_vol, const Volume* x_hat, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument(fmt::format("rho must be >= 0, got {}", rho));
  if (rho > 0.0 && x_hat == nullptr) throw std::invalid_argument("rho > 0 requires a diffusion estimate x_hat");
  if (x_hat != nullptr) require_grid(grid, *x_hat, "x_hat");

  LossTerms terms;
  terms.output = inr_forward(g, model, grid, fbp_vol);
  auto proj = nn::linear_map(
      terms.output, [&A](const Tensor& v) { return A.forward(v); }, [&A](const Tensor& s) { return A.adjoint(s); });
  nn::require_shape(y, proj.shape(), "sinogram");
  auto data = nn::mse(proj, g.constant(y));
  terms.data = data.value().item();

  if (rho > 0.0) {
    auto prox = nn::mse(g.constant(x_hat->data), terms.output);
    terms.prox = prox.value().item();
    terms.total = nn::add(data, nn::scale(prox, rho));
  } else {
    if (x_hat != nullptr) {
      const Tensor diff = x_hat->data - terms.output.value();
      terms.prox = nn::squared_norm(diff) / static_cast<double>(diff.size());
    }
    terms.total = data;
  }
  return terms;
}

FitResult fit_inr(InrModel& model, const CoordinateGrid& grid, const tomo::Projector& A, const Tensor& y,
                  const Volume& fbp_vol, const Volume* x_hat, double rho, std::size_t steps, double lr) {
  if (lr < 0.0) throw std::invalid_argument(fmt::format("INR learning rate must be >= 0, got {}", lr));
  nn::AdamOptions opt;
  opt.lr = lr;
  FitResult res;
  try {
    for (std::size_t i = 0; i < steps; ++i) {
      nn::Graph g;
      auto terms = proximal_loss(g, model, grid, A, y, fbp_vol, x_hat, rho);
      if (i == 0) res.initial_loss = terms.total.value().item();
      if (lr == 0.0) break;
      model.params.zero_grad();
      g.backward(terms.total);
      nn::adam_step(model.params, model.adam, opt);
    }
    nn::Graph g;
    auto terms = proximal_loss(g, model, grid, A, y, fbp_vol, x_hat, rho);
    res.final_loss = terms.total.value().item();
    res.data = terms.data;
    res.prox = terms.prox;
    res.output = Volume(terms.output.value());
    if (steps == 0) res.initial_loss = res.final_loss;
  } catch (const NonFiniteError& e) {
    throw DivergenceError(fmt::format("INR fit diverged: {}", e.what()));
  }
  if (res.final_loss > res.initial_loss) {
    spdlog::warn("INR fit did not improve: loss {:.6g} -> {:.6g} over {} steps", res.initial_loss, res.final_loss,
                 steps);
  }
  return res;
}

double resolve_rho(double data_term, double prox_term, double ratio_target) {
  if (!(ratio_target >= 0.0)) throw std::invalid_argument(fmt::format("rho ratio must be >= 0, got {}", ratio_target));
  if (ratio_target == 0.0) return 0.0;
  if (!(data_term >= 0.0) || !(prox_term >= 0.0)) {
    throw std::invalid_argument(fmt::format("loss terms must be >= 0 (data {}, prox {})", data_term, prox_term));
  }
  if (prox_term == 0.0) {
    spdlog::warn("proximal term is zero; using rho = 0");
    return 0.0;
  }
  return ratio_target * data_term / prox_term;
}

}  // namespace dinr::inr
