#pragma once

#include <cstdint>
#include <vector>

#include "dinr/nnkit/param_set.hpp"

namespace dinr::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers. Sized lazily on the first step.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  void reset() {
    m.clear();
    v.clear();
    step = 0;
  }
};

// One bias-corrected Adam update from params.grads(). Throws
// std::invalid_argument when lr <= 0 and ShapeError when the state belongs
// to a differently sized parameter set.
void adam_step(ParamSet& params, AdamState& state, const AdamOptions& opt);

}  // namespace dinr::nn
