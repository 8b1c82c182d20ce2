#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "../support/oracles.hpp"
#include "dinr/errors.hpp"
#include "dinr/inr/inr.hpp"
#include "dinr/nnkit/ops.hpp"
#include "dinr/tomo/projector.hpp"

using namespace dinr;
using namespace dinr::inr;

namespace {

double psnr_ref(const Tensor& a, const Tensor& b) {
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  return 10 * std::log10(1.0 / (se / static_cast<double>(a.size())));
}

Volume disc_volume(std::size_t n, double radius_frac, double value) {
  Volume v(1, n);
  const double c = (n - 1) / 2.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t col = 0; col < n; ++col) {
      const double dx = (col - c) / (n / 2.0), dy = (r - c) / (n / 2.0);
      v.data[r * n + col] = dx * dx + dy * dy <= radius_frac * radius_frac ? value : 0.0;
    }
  return v;
}

// Scalar-loop SIREN on one input vector.
double siren_ref(const nn::ParamSet& p, const nn::MlpSpec& spec, std::vector<double> h) {
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const auto W = p.values("fc" + std::to_string(l) + ".weight");
    const auto b = p.values("fc" + std::to_string(l) + ".bias");
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    std::vector<double> next(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += W[o * in + i] * h[i];
      next[o] = l + 1 < spec.layers() ? std::sin(spec.w0 * z) : z;
    }
    h = next;
  }
  return h[0];
}

}  // namespace

TEST_CASE("coordinate grid") {
  const auto g = CoordinateGrid::make(2, 3, 4);
  REQUIRE(g.points.shape() == nn::Shape{24, 3});
  const double xs[4] = {-1, -1.0 / 3, 1.0 / 3, 1};
  const double ys[3] = {-1, 0, 1};
  const double zs[2] = {-1, 1};
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t i = (s * 3 + r) * 4 + c;
        CHECK(g.points[i * 3 + 0] == doctest::Approx(xs[c]).epsilon(1e-15));
        CHECK(g.points[i * 3 + 1] == ys[r]);
        CHECK(g.points[i * 3 + 2] == zs[s]);
      }
  // exact symmetry about zero
  const auto h = CoordinateGrid::make(1, 7, 7);
  for (std::size_t i = 0; i < 49; ++i) {
    CHECK(h.points[i * 3] == -h.points[(48 - i) * 3]);
    CHECK(h.points[i * 3 + 2] == 0.0);
  }
}

TEST_CASE("inr forward") {
  auto model = InrModel::create(InrModel::default_spec(), 9);
  CHECK(model.spec.in_width() == 4);
  SUBCASE("zero final layer") {
    for (double& v : model.params.values("fc3.weight")) v = 0;
    for (double& v : model.params.values("fc3.bias")) v = 0;
    const auto grid = CoordinateGrid::make(1, 8, 8);
    const auto out = inr_forward(model, grid, Volume(Tensor({1, 8, 8}, oracle::randu(64, 1))));
    for (double v : out.data.storage()) CHECK(v == 0.0);
  }
  SUBCASE("scalar-loop oracle on a 4x4 grid") {
    const auto grid = CoordinateGrid::make(1, 4, 4);
    const Volume fbp(Tensor({1, 4, 4}, oracle::randu(16, 2)));
    const auto out = inr_forward(model, grid, fbp);
    const double coord[4] = {-1, -1.0 / 3, 1.0 / 3, 1};
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        const double ref = siren_ref(model.params, model.spec, {coord[c], coord[r], 0.0, fbp.data[r * 4 + c]});
        CHECK(std::abs(out.data[r * 4 + c] - ref) < 1e-12);
      }
  }
  SUBCASE("pointwise under permutation") {
    const auto grid = CoordinateGrid::make(1, 6, 6);
    const Volume fbp(Tensor({1, 6, 6}, oracle::randu(36, 3)));
    const auto out = inr_forward(model, grid, fbp);
    std::vector<std::size_t> perm(36);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(4));
    CoordinateGrid pg = grid;
    Volume pf(1, 6);
    for (std::size_t i = 0; i < 36; ++i) {
      for (int k = 0; k < 3; ++k) pg.points[i * 3 + k] = grid.points[perm[i] * 3 + k];
      pf.data[i] = fbp.data[perm[i]];
    }
    const auto pout = inr_forward(model, pg, pf);
    for (std::size_t i = 0; i < 36; ++i) CHECK(pout.data[i] == out.data[perm[i]]);
  }
  SUBCASE("sub-grid equals slicing") {
    const auto grid = CoordinateGrid::make(2, 5, 5);
    const Volume fbp(Tensor({2, 5, 5}, oracle::randu(50, 5)));
    const auto out = inr_forward(model, grid, fbp);
    CoordinateGrid sub;
    sub.slices = 1;
    sub.height = sub.width = 5;
    sub.points = Tensor({25, 3}, std::vector<double>(grid.points.storage().begin() + 75, grid.points.storage().end()));
    const Volume fsub(Tensor({1, 5, 5}, std::vector<double>(fbp.data.storage().begin() + 25, fbp.data.storage().end())));
    const auto sout = inr_forward(model, sub, fsub);
    // GEMM blocking depends on the row count, so agreement is to rounding
    for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(sout.data[i] - out.data[25 + i]) < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(inr_forward(model, CoordinateGrid::make(1, 4, 4), Volume(1, 5)), ShapeError);
  }
  SUBCASE("deterministic creation") {
    CHECK(InrModel::create(InrModel::default_spec(), 9).params == model.params);
    CHECK_FALSE(InrModel::create(InrModel::default_spec(), 10).params == model.params);
  }
}

TEST_CASE("proximal loss identities") {
  const std::size_t n = 8;
  const auto geom = tomo::Geometry::uniform(4, n);
  const tomo::Projector A(geom);
  const auto grid = CoordinateGrid::make(1, n, n);
  const Volume truth(Tensor({1, n, n}, oracle::randu(n * n, 6, 0, 1)));
  const Tensor y = A.forward(truth.data);
  const auto fbp = tomo::fbp(tomo::Sinogram(geom, y));
  const Volume xhat(Tensor({1, n, n}, oracle::randu(n * n, 7, 0, 1)));
  auto model = InrModel::create(nn::MlpSpec{{4, 16, 16, 1}, nn::Activation::Sine, 30}, 3);

  SUBCASE("rho = 0 is the data MSE, bitwise") {
    nn::Graph g1, g2, g3;
    const auto plain = proximal_loss(g1, model, grid, A, y, fbp, nullptr, 0.0);
    const auto with_hat = proximal_loss(g2, model, grid, A, y, fbp, &xhat, 0.0);
    const double direct = nn::mse(g3.constant(A.forward(plain.output.value())), g3.constant(y)).value().item();
    CHECK(plain.total.value().item() == direct);
    CHECK(with_hat.total.value().item() == direct);
    CHECK(plain.data == direct);
    CHECK(with_hat.prox > 0.0);
  }
  SUBCASE("total is data plus rho times prox") {
    for (double rho : {1e-5, 0.3, 7.0}) {
      nn::Graph g;
      const auto t = proximal_loss(g, model, grid, A, y, fbp, &xhat, rho);
      CHECK(t.total.value().item() == t.data + rho * t.prox);
      CHECK(t.data >= 0.0);
      CHECK(t.prox >= 0.0);
    }
  }
  SUBCASE("exact fit gives zero loss") {
    auto m = InrModel::create(nn::MlpSpec{{4, 8, 1}, nn::Activation::Sine, 30}, 1);
    for (double& v : m.params.values("fc1.weight")) v = 0;
    m.params.values("fc1.bias")[0] = 0.4;
    const Volume flat(Tensor({1, n, n}, 0.4));
    nn::Graph g;
    const auto t = proximal_loss(g, m, grid, A, A.forward(flat.data), fbp, &flat, 2.0);
    CHECK(t.total.value().item() == 0.0);
  }
  SUBCASE("errors") {
    nn::Graph g;
    CHECK_THROWS(proximal_loss(g, model, grid, A, y, fbp, nullptr, 0.5));
    CHECK_THROWS(proximal_loss(g, model, grid, A, y, fbp, &xhat, -1.0));
  }
  SUBCASE("prox gradient vanishes at the estimate") {
    const auto out = inr_forward(model, grid, fbp);
    auto grads = [&](double rho) {
      model.params.zero_grad();
      nn::Graph g;
      g.backward(proximal_loss(g, model, grid, A, y, fbp, &out, rho).total);
      return model.params.grads();
    };
    const auto g0 = grads(0.0), g1 = grads(5.0);
    CHECK(oracle::max_rel_err(g0, g1, 1e-8) < 1e-10);
  }
}

TEST_CASE("loss gradient through the projector") {
  const std::size_t n = 8;
  const auto geom = tomo::Geometry::uniform(4, n);
  const tomo::Projector A(geom);
  const auto grid = CoordinateGrid::make(1, n, n);
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Volume truth(Tensor({1, n, n}, oracle::randu(n * n, seed, 0, 1)));
    const Tensor y = A.forward(truth.data);
    const auto fbp = tomo::fbp(tomo::Sinogram(geom, y));
    const Volume xhat(Tensor({1, n, n}, oracle::randu(n * n, seed + 40, 0, 1)));
    auto model = InrModel::create(nn::MlpSpec{{4, 6, 6, 1}, nn::Activation::Sine, 3}, seed);
    auto loss = [&](const std::vector<double>& w) {
      const auto keep = model.params.values();
      model.params.values() = w;
      nn::Graph g;
      const double l = proximal_loss(g, model, grid, A, y, fbp, &xhat, 0.5).total.value().item();
      model.params.values() = keep;
      return l;
    };
    model.params.zero_grad();
    {
      nn::Graph g;
      g.backward(proximal_loss(g, model, grid, A, y, fbp, &xhat, 0.5).total);
    }
    CHECK(oracle::max_rel_err(model.params.grads(), oracle::numeric_grad(loss, model.params.values())) < 1e-5);
  }
}

TEST_CASE("fit inr") {
  const std::size_t n = 16;
  const auto truth = disc_volume(n, 0.6, 0.8);
  const auto geom = tomo::Geometry::uniform(60, n);
  const tomo::Projector A(geom);
  const Tensor y = A.forward(truth.data);
  const auto fbp = tomo::fbp(tomo::Sinogram(geom, y));
  const auto grid = CoordinateGrid::like(truth);

  SUBCASE("zero learning rate") {
    auto model = InrModel::create(InrModel::default_spec(), 1);
    const auto before = model.params;
    const auto r = fit_inr(model, grid, A, y, fbp, nullptr, 0.0, 5, 0.0);
    CHECK(model.params == before);
    CHECK(r.final_loss == r.initial_loss);
  }
  SUBCASE("disc from 60 views") {
    auto model = InrModel::create(InrModel::default_spec(), 2);
    const auto r = fit_inr(model, grid, A, y, fbp, nullptr, 0.0, 2000, 1e-4);
    const double p_inr = psnr_ref(r.output.data, truth.data);
    const double p_fbp = psnr_ref(fbp.data, truth.data);
    MESSAGE("inr " << p_inr << " fbp " << p_fbp);
    CHECK(r.final_loss < r.initial_loss);
    CHECK(p_inr > p_fbp - 3.0);
  }
  SUBCASE("large rho pulls the output to the target") {
    auto model = InrModel::create(InrModel::default_spec(), 3);
    const auto target = disc_volume(n, 0.4, 0.3);
    const auto r = fit_inr(model, grid, A, y, fbp, &target, 1e6, 500, 1e-4);
    const double rel = std::sqrt(nn::squared_norm(r.output.data - target.data) / nn::squared_norm(target.data));
    MESSAGE("relative distance " << rel);
    CHECK(rel < 0.05);
  }
  SUBCASE("non-finite data aborts") {
    auto model = InrModel::create(InrModel::default_spec(), 4);
    Tensor bad = y;
    bad[3] = std::nan("");
    CHECK_THROWS_AS(fit_inr(model, grid, A, bad, fbp, nullptr, 0.0, 3, 1e-4), DivergenceError);
  }
}

TEST_CASE("resolve rho") {
  CHECK(resolve_rho(1.0, 1.0, 1e-5) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK(resolve_rho(2.0, 0.5, 1e-6) == doctest::Approx(4e-6).epsilon(1e-15));
  CHECK(resolve_rho(3.0, 2.0, 0.0) == 0.0);
  CHECK(resolve_rho(3.0, 0.0, 1e-5) == 0.0);
  CHECK_THROWS(resolve_rho(-1.0, 1.0, 1e-5));
}
