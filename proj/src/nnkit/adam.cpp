#include "dinr/nnkit/adam.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dinr/errors.hpp"

namespace dinr::nn {

void adam_step(ParamSet& params, AdamState& state, const AdamOptions& opt) {
  if (!(opt.lr > 0.0)) throw std::invalid_argument(fmt::format("adam: learning rate must be > 0, got {}", opt.lr));
  const auto n = params.size();
  if (state.step == 0 && state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) {
    throw ShapeError(fmt::format("adam: state sized for {} params, got {}", state.m.size(), n));
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  auto& w = params.values();
  const auto& g = params.grads();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g[i];
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

}  // namespace dinr::nn
