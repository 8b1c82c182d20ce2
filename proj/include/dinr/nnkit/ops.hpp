#pragma once

#include <functional>

#include "dinr/nnkit/graph.hpp"

// Differentiable operations. Every op checks its output for NaN/Inf and
// throws NonFiniteError rather than propagating silently.
namespace dinr::nn {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
// a * x + b, elementwise with scalar coefficients.
Var affine(Var x, double a, double b);

Var sum(Var a);
Var mean(Var a);
// mean((a - b)^2); either side may be a constant.
Var mse(Var a, Var b);

Var reshape(Var a, Shape shape);

// x: (N, K), weight: (M, K), bias: (M) -> (N, M) = x * weight^T + bias
Var linear(Var x, Var weight, Var bias);

// sin(w0 * x)
Var sine(Var x, double w0);
Var relu(Var x);

// x: (N, C, H, W), weight: (Co, C, k, k), bias: (Co). Zero padding k/2 on
// each side, stride 1, so spatial size is preserved for odd k.
Var conv2d(Var x, Var weight, Var bias);

// x: (N, C, H, W) plus a per-channel offset e: (C).
Var add_channel(Var x, Var e);

// Wraps an external linear operator (e.g. a projector) as a graph op.
// `adjoint` must be the exact transpose of `forward` for gradients to be
// correct.
using LinearFn = std::function<Tensor(const Tensor&)>;
Var linear_map(Var x, const LinearFn& forward, LinearFn adjoint);

}  // namespace dinr::nn
