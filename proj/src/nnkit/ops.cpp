#include "dinr/nnkit/ops.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include "dinr/errors.hpp"
#include "simd_math.hpp"

namespace dinr::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap as_mat(const Tensor& t, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatMap(t.data().data(), rows, cols);
}
MatMap as_mat(Tensor& t, Eigen::Index rows, Eigen::Index cols) { return MatMap(t.data().data(), rows, cols); }

void require_same_shape(Var a, Var b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_string(a.shape()), shape_string(b.shape())));
  }
}

Var finish(Graph& g, Tensor out, const std::vector<Var>& inputs, Graph::BackwardFn bw, std::string_view op) {
  out.check_finite(op);
  return g.record(std::move(out), inputs, std::move(bw));
}

// Accumulates `s * src` into the gradient of node `id` when it wants one.
void accumulate(Graph& g, Var v, const Tensor& src, double s = 1.0) {
  if (!g.requires_grad(v)) return;
  auto& dst = g.grad_mut(v.id());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return finish(a.graph(), a.value() + b.value(), {a, b},
                [a, b](Graph& g, std::size_t self) {
                  const auto& gy = g.grad(self);
                  accumulate(g, a, gy);
                  accumulate(g, b, gy);
                },
                "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return finish(a.graph(), a.value() - b.value(), {a, b},
                [a, b](Graph& g, std::size_t self) {
                  const auto& gy = g.grad(self);
                  accumulate(g, a, gy);
                  accumulate(g, b, gy, -1.0);
                },
                "sub");
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return finish(a.graph(), std::move(out), {a, b},
                [a, b](Graph& g, std::size_t self) {
                  const auto& gy = g.grad(self);
                  if (g.requires_grad(a)) {
                    auto& ga = g.grad_mut(a.id());
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * b.value()[i];
                  }
                  if (g.requires_grad(b)) {
                    auto& gb = g.grad_mut(b.id());
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * a.value()[i];
                  }
                },
                "mul");
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var x, double a, double b) {
  Tensor out = x.value();
  for (double& v : out.storage()) v = a * v + b;
  return finish(x.graph(), std::move(out), {x},
                [x, a](Graph& g, std::size_t self) { accumulate(g, x, g.grad(self), a); }, "affine");
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return finish(a.graph(), Tensor::scalar(s), {a},
                [a](Graph& g, std::size_t self) {
                  if (!g.requires_grad(a)) return;
                  const double gy = g.grad(self)[0];
                  for (double& v : g.grad_mut(a.id()).storage()) v += gy;
                },
                "sum");
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mse(Var a, Var b) {
  require_same_shape(a, b, "mse");
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto n = av.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return finish(a.graph(), Tensor::scalar(s * inv_n), {a, b},
                [a, b, inv_n](Graph& g, std::size_t self) {
                  const double gy = g.grad(self)[0] * 2.0 * inv_n;
                  const auto& av = a.value();
                  const auto& bv = b.value();
                  if (g.requires_grad(a)) {
                    auto& ga = g.grad_mut(a.id());
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy * (av[i] - bv[i]);
                  }
                  if (g.requires_grad(b)) {
                    auto& gb = g.grad_mut(b.id());
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy * (av[i] - bv[i]);
                  }
                },
                "mse");
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.graph().record(std::move(out), {a}, [a](Graph& g, std::size_t self) {
    if (!g.requires_grad(a)) return;
    auto& ga = g.grad_mut(a.id());
    const auto& gy = g.grad(self);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
  });
}

Var linear(Var x, Var weight, Var bias) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || wv.dim(1) != xv.dim(1) || bv.dim(0) != wv.dim(0)) {
    throw ShapeError(fmt::format("linear: incompatible shapes x{} weight{} bias{}", shape_string(xv.shape()),
                                 shape_string(wv.shape()), shape_string(bv.shape())));
  }
  const auto n = static_cast<Eigen::Index>(xv.dim(0));
  const auto k = static_cast<Eigen::Index>(xv.dim(1));
  const auto m = static_cast<Eigen::Index>(wv.dim(0));

  Tensor out({xv.dim(0), wv.dim(0)});
  auto y = as_mat(out, n, m);
  y.noalias() = as_mat(xv, n, k) * as_mat(wv, m, k).transpose();
  y.rowwise() += ConstVecMap(bv.data().data(), m).transpose();

  return finish(x.graph(), std::move(out), {x, weight, bias},
                [x, weight, bias, n, k, m](Graph& g, std::size_t self) {
                  const auto gy = as_mat(g.grad(self), n, m);
                  if (g.requires_grad(x)) {
                    as_mat(g.grad_mut(x.id()), n, k).noalias() += gy * as_mat(weight.value(), m, k);
                  }
                  if (g.requires_grad(weight)) {
                    as_mat(g.grad_mut(weight.id()), m, k).noalias() += gy.transpose() * as_mat(x.value(), n, k);
                  }
                  if (g.requires_grad(bias)) {
                    // plain loop: Eigen's vectorized reductions sum in an alignment-dependent order
                    double* gb = g.grad_mut(bias.id()).data().data();
                    for (Eigen::Index i = 0; i < n; ++i)
                      for (Eigen::Index j = 0; j < m; ++j) gb[j] += gy(i, j);
                  }
                },
                "linear");
}

Var sine(Var x, double w0) {
  const auto& xv = x.value();
  Tensor out(xv.shape());
  detail::sin_scaled(xv.data().data(), out.data().data(), xv.size(), w0);
  return finish(x.graph(), std::move(out), {x},
                [x, w0](Graph& g, std::size_t self) {
                  if (!g.requires_grad(x)) return;
                  const auto& xv = x.value();
                  detail::dsin_scaled(xv.data().data(), g.grad(self).data().data(),
                                      g.grad_mut(x.id()).data().data(), xv.size(), w0);
                },
                "sine");
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return finish(x.graph(), std::move(out), {x},
                [x](Graph& g, std::size_t self) {
                  if (!g.requires_grad(x)) return;
                  const auto& xv = x.value();
                  const auto& gy = g.grad(self);
                  auto& gx = g.grad_mut(x.id());
                  for (std::size_t i = 0; i < gx.size(); ++i) {
                    if (xv[i] > 0.0) gx[i] += gy[i];
                  }
                },
                "relu");
}

namespace {

struct ConvDims {
  std::size_t n, c, h, w, co, k, pad;
  std::size_t hw() const { return h * w; }
  std::size_t ckk() const { return c * k * k; }
};

// cols: (C*k*k, H*W) for one sample.
void im2col(const double* x, const ConvDims& d, double* cols) {
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        double* row = cols + ((c * d.k + ky) * d.k + kx) * d.hw();
        for (std::size_t y = 0; y < d.h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad);
          for (std::size_t xx = 0; xx < d.w; ++xx) {
            const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(d.pad);
            const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(d.h) &&
                                sx < static_cast<std::ptrdiff_t>(d.w);
            row[y * d.w + xx] = inside ? x[(c * d.h + static_cast<std::size_t>(sy)) * d.w + static_cast<std::size_t>(sx)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvDims& d, double* x) {
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const double* row = cols + ((c * d.k + ky) * d.k + kx) * d.hw();
        for (std::size_t y = 0; y < d.h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t xx = 0; xx < d.w; ++xx) {
            const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(d.pad);
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(d.w)) continue;
            x[(c * d.h + static_cast<std::size_t>(sy)) * d.w + static_cast<std::size_t>(sx)] += row[y * d.w + xx];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1) {
    throw ShapeError(fmt::format("conv2d: expected x(N,C,H,W), weight(Co,C,k,k), bias(Co); got {} {} {}",
                                 shape_string(xv.shape()), shape_string(wv.shape()), shape_string(bv.shape())));
  }
  const ConvDims d{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), wv.dim(2) / 2};
  if (wv.dim(1) != d.c) {
    throw ShapeError(fmt::format("conv2d: weight expects {} input channels, input has {}", wv.dim(1), d.c));
  }
  if (wv.dim(3) != d.k) throw ShapeError("conv2d: only square kernels are supported");
  if (bv.dim(0) != d.co) throw ShapeError("conv2d: bias length must equal output channels");
  if (d.k > d.h || d.k > d.w) {
    throw ShapeError(fmt::format("conv2d: kernel {}x{} larger than input {}x{}", d.k, d.k, d.h, d.w));
  }

  const auto hw = static_cast<Eigen::Index>(d.hw());
  const auto ckk = static_cast<Eigen::Index>(d.ckk());
  const auto co = static_cast<Eigen::Index>(d.co);

  auto cols = std::make_shared<std::vector<double>>(d.n * d.ckk() * d.hw());
  Tensor out({d.n, d.co, d.h, d.w});
  const auto wmat = as_mat(wv, co, ckk);
  for (std::size_t s = 0; s < d.n; ++s) {
    double* c = cols->data() + s * d.ckk() * d.hw();
    im2col(xv.data().data() + s * d.c * d.hw(), d, c);
    MatMap y(out.data().data() + s * d.co * d.hw(), co, hw);
    y.noalias() = wmat * ConstMatMap(c, ckk, hw);
    y.colwise() += ConstVecMap(bv.data().data(), co);
  }

  return finish(x.graph(), std::move(out), {x, weight, bias},
                [x, weight, bias, d, cols, hw, ckk, co](Graph& g, std::size_t self) {
                  const auto& gy = g.grad(self);
                  const bool gx = g.requires_grad(x);
                  const bool gw = g.requires_grad(weight);
                  const bool gb = g.requires_grad(bias);
                  const auto wmat = as_mat(weight.value(), co, ckk);
                  RowMat dcols;
                  for (std::size_t s = 0; s < d.n; ++s) {
                    ConstMatMap gys(gy.data().data() + s * d.co * d.hw(), co, hw);
                    const double* c = cols->data() + s * d.ckk() * d.hw();
                    if (gw) {
                      as_mat(g.grad_mut(weight.id()), co, ckk).noalias() += gys * ConstMatMap(c, ckk, hw).transpose();
                    }
                    if (gb) {
                      double* gbv = g.grad_mut(bias.id()).data().data();
                      for (Eigen::Index o = 0; o < co; ++o) {
                        double acc = 0.0;
                        for (Eigen::Index i = 0; i < hw; ++i) acc += gys(o, i);
                        gbv[o] += acc;
                      }
                    }
                    if (gx) {
                      dcols.noalias() = wmat.transpose() * gys;
                      col2im_add(dcols.data(), d, g.grad_mut(x.id()).data().data() + s * d.c * d.hw());
                    }
                  }
                },
                "conv2d");
}

Var add_channel(Var x, Var e) {
  const auto& xv = x.value();
  const auto& ev = e.value();
  if (xv.rank() != 4 || ev.rank() != 1 || ev.dim(0) != xv.dim(1)) {
    throw ShapeError(fmt::format("add_channel: cannot broadcast {} over {}", shape_string(ev.shape()),
                                 shape_string(xv.shape())));
  }
  const std::size_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor out = xv;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) out[(s * c + ch) * hw + i] += ev[ch];
  return finish(x.graph(), std::move(out), {x, e},
                [x, e, n, c, hw](Graph& g, std::size_t self) {
                  const auto& gy = g.grad(self);
                  accumulate(g, x, gy);
                  if (!g.requires_grad(e)) return;
                  auto& ge = g.grad_mut(e.id());
                  for (std::size_t s = 0; s < n; ++s)
                    for (std::size_t ch = 0; ch < c; ++ch)
                      for (std::size_t i = 0; i < hw; ++i) ge[ch] += gy[(s * c + ch) * hw + i];
                },
                "add_channel");
}

Var linear_map(Var x, const LinearFn& forward, LinearFn adjoint) {
  Tensor out = forward(x.value());
  const Shape in_shape = x.value().shape();
  return finish(x.graph(), std::move(out), {x},
                [x, adjoint = std::move(adjoint), in_shape](Graph& g, std::size_t self) {
                  if (!g.requires_grad(x)) return;
                  Tensor back = adjoint(g.grad(self));
                  if (back.size() != shape_size(in_shape)) {
                    throw ShapeError("linear_map: adjoint returned the wrong number of values");
                  }
                  accumulate(g, x, back);
                },
                "linear_map");
}

}  // namespace dinr::nn
