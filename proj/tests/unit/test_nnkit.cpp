#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support/oracles.hpp"
#include "dinr/errors.hpp"
#include "dinr/nnkit/adam.hpp"
#include "dinr/nnkit/graph.hpp"
#include "dinr/nnkit/layers.hpp"
#include "dinr/nnkit/ops.hpp"
#include "dinr/nnkit/param_set.hpp"

using namespace dinr;
using namespace dinr::nn;

namespace {

Tensor vec_tensor(Shape s, std::vector<double> v) { return Tensor(std::move(s), std::move(v)); }

// Loss over a ParamSet evaluated at flat values `x` (grads untouched).
double eval_loss(ParamSet& p, const std::vector<double>& x, const std::function<Var(Graph&, ParamSet&)>& build) {
  const auto keep = p.values();
  p.values() = x;
  Graph g;
  const double l = build(g, p).value().item();
  p.values() = keep;
  return l;
}

double param_grad_error(ParamSet& p, const std::function<Var(Graph&, ParamSet&)>& build) {
  p.zero_grad();
  {
    Graph g;
    g.backward(build(g, p));
  }
  const auto analytic = p.grads();
  const auto numeric =
      oracle::numeric_grad([&](const std::vector<double>& x) { return eval_loss(p, x, build); }, p.values());
  return oracle::max_rel_err(analytic, numeric);
}

}  // namespace

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  t[2] = std::nan("");
  CHECK_THROWS_AS(t.check_finite("t"), NonFiniteError);
}

TEST_CASE("param set layout partitions the flat vector") {
  ParamSet p;
  p.add("a", {2, 3});
  p.add("b", {4});
  p.add("c", {1, 1, 2});
  CHECK_THROWS(p.add("b", {1}));
  std::size_t expect = 0;
  for (const auto& e : p.layout()) {
    CHECK(e.offset == expect);
    expect += e.size();
  }
  CHECK(expect == p.size());
  CHECK(p.grads().size() == p.values().size());
}

TEST_CASE("param set serialization round-trips through float32") {
  ParamSet p;
  p.add("fc0.weight", {3, 2});
  p.add("fc0.bias", {3});
  const auto v = oracle::randn(p.size(), 5);
  p.values() = v;
  std::stringstream ss;
  write_params(ss, p);
  const auto bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "DINRW001");
  const auto q = read_params(ss);
  CHECK(q.layout() == p.layout());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(q.values()[i] == static_cast<double>(static_cast<float>(v[i])));

  std::stringstream bad("DINRX001rest");
  CHECK_THROWS_AS(read_params(bad), FormatError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_params(cut), FormatError);
}

TEST_CASE("graph misuse is reported") {
  Graph g;
  auto x = g.leaf(Tensor::vector({1, 2, 3}));
  CHECK_THROWS_AS(g.backward(x), GraphError);  // not scalar
  auto l = sum(x);
  g.backward(l);
  CHECK_THROWS_AS(g.backward(l), GraphError);  // stale
  CHECK_THROWS_AS(sum(x), GraphError);         // recording after backward
}

TEST_CASE("forward_mlp trivial cases") {
  SUBCASE("zero weights give zero output") {
    MlpSpec spec{{3, 5, 2}, Activation::Identity, 30};
    ParamSet p;
    add_mlp_params(p, spec);
    Graph g;
    auto y = forward_mlp(g, p, g.constant(vec_tensor({2, 3}, {1, 2, 3, -4, 5, 6})), spec);
    for (double v : y.value().storage()) CHECK(v == 0.0);
  }
  SUBCASE("one affine layer by hand") {
    MlpSpec spec{{1, 1}, Activation::Identity, 30};
    ParamSet p;
    add_mlp_params(p, spec);
    p.values("fc0.weight")[0] = 2;
    p.values("fc0.bias")[0] = 1;
    Graph g;
    auto y = forward_mlp(g, p, g.constant(vec_tensor({1, 1}, {3})), spec);
    CHECK(y.value()[0] == 7.0);
  }
  SUBCASE("input width mismatch") {
    MlpSpec spec{{2, 1}, Activation::Identity, 30};
    ParamSet p;
    add_mlp_params(p, spec);
    Graph g;
    CHECK_THROWS_AS(forward_mlp(g, p, g.constant(Tensor({1, 3})), spec), ShapeError);
  }
}

TEST_CASE("sine mlp matches a scalar-loop network") {
  MlpSpec spec{{2, 6, 1}, Activation::Sine, 30};
  ParamSet p;
  add_mlp_params(p, spec);
  Rng rng(42);
  init_siren(p, spec, rng);
  Graph g;
  const double out = forward_mlp(g, p, g.constant(vec_tensor({1, 2}, {0.5, -0.5})), spec).value()[0];

  const auto W0 = p.values("fc0.weight");
  const auto b0 = p.values("fc0.bias");
  const auto W1 = p.values("fc1.weight");
  const auto b1 = p.values("fc1.bias");
  const double in[2] = {0.5, -0.5};
  double ref = b1[0];
  for (int j = 0; j < 6; ++j) {
    double z = b0[j];
    for (int i = 0; i < 2; ++i) z += W0[j * 2 + i] * in[i];
    ref += W1[j] * std::sin(30 * z);
  }
  CHECK(std::abs(out - ref) < 1e-12);
}

TEST_CASE("siren initialization bounds") {
  MlpSpec spec{{4, 64, 64, 1}, Activation::Sine, 30};
  ParamSet p;
  add_mlp_params(p, spec);
  Rng rng(1);
  init_siren(p, spec, rng);
  for (double v : p.values("fc0.weight")) CHECK(std::abs(v) <= 1.0 / 4);
  for (double v : p.values("fc1.weight")) CHECK(std::abs(v) <= std::sqrt(6.0 / 64) / 30);
  for (double v : p.values("fc2.weight")) CHECK(std::abs(v) <= std::sqrt(6.0 / 64) / 30);
}

TEST_CASE("identity mlp is linear without biases") {
  MlpSpec spec{{3, 4, 2}, Activation::Identity, 30};
  ParamSet p;
  add_mlp_params(p, spec);
  p.values() = oracle::randn(p.size(), 9);
  for (double& v : p.values("fc0.bias")) v = 0;
  for (double& v : p.values("fc1.bias")) v = 0;
  const auto x = oracle::randn(3, 1), y = oracle::randn(3, 2);
  const double a = 0.7, b = -1.3;
  std::vector<double> mix(3);
  for (int i = 0; i < 3; ++i) mix[i] = a * x[i] + b * y[i];
  auto run = [&](const std::vector<double>& in) {
    Graph g;
    return forward_mlp(g, p, g.constant(vec_tensor({1, 3}, in)), spec).value();
  };
  const auto fx = run(x), fy = run(y), fm = run(mix);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(fm[i] - (a * fx[i] + b * fy[i])) < 1e-10);
}

TEST_CASE("backward basics") {
  SUBCASE("sum(w * x) has gradient x") {
    ParamSet p;
    p.add("w", {4});
    p.values() = {1, 2, 3, 4};
    const Tensor x = Tensor::vector({0.5, -1, 2, 7});
    Graph g;
    g.backward(sum(mul(g.parameter(p, "w"), g.constant(x))));
    for (int i = 0; i < 4; ++i) CHECK(p.grads()[i] == x[i]);
  }
  SUBCASE("constant loss leaves zero gradients") {
    ParamSet p;
    p.add("w", {3});
    p.values() = {1, 2, 3};
    Graph g;
    g.parameter(p, "w");
    g.backward(sum(g.constant(Tensor::vector({1, 2}))));
    for (double v : p.grads()) CHECK(v == 0.0);
  }
  SUBCASE("mse(sin(w x), t) matches central differences") {
    ParamSet p;
    p.add("w", {5});
    p.values() = oracle::randn(5, 7, 0.5);
    const Tensor x = Tensor::vector(oracle::randn(5, 8));
    const Tensor t = Tensor::vector(oracle::randn(5, 9));
    auto build = [&](Graph& g, ParamSet& ps) { return mse(sine(mul(g.parameter(ps, "w"), g.constant(x)), 1.0), g.constant(t)); };
    CHECK(param_grad_error(p, build) < 1e-6);
  }
}

TEST_CASE("elementwise ops gradient check over seeds") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    ParamSet p;
    p.add("a", {2, 3});
    p.add("b", {2, 3});
    p.values() = oracle::randn(p.size(), seed);
    auto build = [](Graph& g, ParamSet& ps) {
      auto a = g.parameter(ps, "a");
      auto b = g.parameter(ps, "b");
      auto h = add(mul(a, b), sub(scale(a, 0.3), affine(b, 2.0, -1.0)));
      h = relu(add(h, g.constant(Tensor({2, 3}, 5.0))));  // shifted away from the kink
      return add(mean(reshape(h, {6})), mse(a, b));
    };
    CHECK(param_grad_error(p, build) < 1e-6);
  }
}

TEST_CASE("linear and sine layers gradient check over seeds") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    MlpSpec spec{{3, 8, 8, 2}, Activation::Sine, 30};
    ParamSet p;
    add_mlp_params(p, spec);
    Rng rng(seed);
    init_siren(p, spec, rng);
    const Tensor x({5, 3}, oracle::randu(15, seed + 100));
    const Tensor t({5, 2}, oracle::randn(10, seed + 200));
    auto build = [&](Graph& g, ParamSet& ps) { return mse(forward_mlp(g, ps, g.constant(x), spec), g.constant(t)); };
    CHECK(param_grad_error(p, build) < 1e-5);
  }
}

TEST_CASE("input gradient of the mlp") {
  MlpSpec spec{{2, 6, 1}, Activation::Sine, 30};
  ParamSet p;
  add_mlp_params(p, spec);
  Rng rng(3);
  init_siren(p, spec, rng);
  const auto x0 = oracle::randu(8, 4);
  auto f = [&](const std::vector<double>& x) {
    Graph g;
    return sum(forward_mlp(g, p, g.constant(vec_tensor({4, 2}, x)), spec)).value().item();
  };
  Graph g;
  auto xin = g.leaf(vec_tensor({4, 2}, x0));
  g.backward(sum(forward_mlp(g, p, xin, spec)));
  CHECK(oracle::max_rel_err(xin.grad().storage(), oracle::numeric_grad(f, x0)) < 1e-5);
}

TEST_CASE("conv2d by hand") {
  SUBCASE("identity 1x1 kernel") {
    ConvSpec spec = ConvSpec::stack(1, {}, 1, 1);
    ParamSet p;
    add_conv_params(p, spec);
    p.values("conv0.weight")[0] = 1.0;
    const Tensor x({1, 4, 4}, oracle::randn(16, 2));
    Graph g;
    auto y = forward_convnet(g, p, g.constant(x), spec, Tensor({1}));
    CHECK(y.value() == x);
  }
  SUBCASE("all-ones 3x3 on a one-hot image") {
    ConvSpec spec = ConvSpec::stack(1, {}, 1, 3);
    ParamSet p;
    add_conv_params(p, spec);
    for (double& v : p.values("conv0.weight")) v = 1.0;
    Tensor x({1, 5, 5});
    x[2 * 5 + 2] = 1.0;
    Graph g;
    auto y = forward_convnet(g, p, g.constant(x), spec, Tensor({1})).value();
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const bool inside = std::abs(i - 2) <= 1 && std::abs(j - 2) <= 1;
        CHECK(y[i * 5 + j] == (inside ? 1.0 : 0.0));
      }
  }
  SUBCASE("kernel larger than input and channel mismatch") {
    ConvSpec spec = ConvSpec::stack(1, {}, 1, 5);
    ParamSet p;
    add_conv_params(p, spec);
    Graph g;
    CHECK_THROWS(forward_convnet(g, p, g.constant(Tensor({1, 3, 3})), spec, Tensor({1})));
    CHECK_THROWS_AS(forward_convnet(g, p, g.constant(Tensor({2, 8, 8})), spec, Tensor({1})), ShapeError);
  }
}

TEST_CASE("convnet matches a scalar-loop reference") {
  // Two layers, embedding added after the first ReLU.
  ConvSpec spec = ConvSpec::stack(2, {3}, 2, 3);
  ParamSet p;
  add_conv_params(p, spec);
  Rng rng(3);
  init_conv(p, spec, rng);
  for (double& v : p.values("conv0.bias")) v = rng.normal() * 0.1;
  for (double& v : p.values("conv1.bias")) v = rng.normal() * 0.1;
  const std::size_t H = 6, W = 5;
  const auto x = oracle::randn(2 * H * W, 11);
  const Tensor emb = Tensor::vector({0.1, -0.2, 0.3});
  Graph g;
  const auto y = forward_convnet(g, p, g.constant(Tensor({2, H, W}, x)), spec, emb).value();

  auto vals = [&](const char* n) { auto s = p.values(n); return std::vector<double>(s.begin(), s.end()); };
  auto h = oracle::conv_same(x, 2, H, W, vals("conv0.weight"), 3, 3, vals("conv0.bias"));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < H * W; ++i) h[c * H * W + i] = std::max(h[c * H * W + i], 0.0) + emb[c];
  const auto ref = oracle::conv_same(h, 3, H, W, vals("conv1.weight"), 2, 3, vals("conv1.bias"));
  double worst = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - y[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("convnet gradient check over seeds") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    ConvSpec spec = ConvSpec::stack(1, {3}, 1, 3);
    ParamSet p;
    add_conv_params(p, spec);
    Rng rng(seed);
    init_conv(p, spec, rng);
    for (double& v : p.values("conv0.bias")) v = 0.5;  // keep ReLU inputs off the kink
    const Tensor x({2, 1, 5, 5}, oracle::randu(50, seed + 1, 0.0, 1.0));
    const Tensor t({2, 1, 5, 5}, oracle::randn(50, seed + 2));
    const Tensor emb = timestep_embedding(3.0, 3);
    auto build = [&](Graph& g, ParamSet& ps) {
      return mse(forward_convnet(g, ps, g.constant(x), spec, emb), g.constant(t));
    };
    CHECK(param_grad_error(p, build) < 1e-5);
  }
}

TEST_CASE("conv spec descriptor round trip") {
  const auto spec = ConvSpec::stack(1, {16, 32, 32, 16}, 1, 3);
  const auto back = ConvSpec::parse(spec.describe());
  CHECK(back.describe() == spec.describe());
  CHECK(back.layers.size() == 5);
  CHECK(back.embed_channels() == 16);
  CHECK_THROWS(ConvSpec::parse("1-x"));
}

TEST_CASE("timestep embedding values") {
  const auto e = timestep_embedding(0.0, 4);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == 1.0);
  CHECK(e[3] == 1.0);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters") {
    ParamSet p;
    p.add("w", {3});
    p.values() = {1, 2, 3};
    AdamState st;
    for (int i = 0; i < 5; ++i) adam_step(p, st, {});
    CHECK(p.values() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("single step by hand") {
    ParamSet p;
    p.add("w", {1});
    p.values() = {0.25};
    p.grads() = {1.0};
    AdamState st;
    AdamOptions opt;
    opt.lr = 0.1;
    adam_step(p, st, opt);
    const double m = 0.1 * 1.0, v = 0.001 * 1.0;
    const double mh = m / (1 - 0.9), vh = v / (1 - 0.999);
    CHECK(std::abs(p.values()[0] - (0.25 - 0.1 * mh / (std::sqrt(vh) + 1e-8))) < 1e-12);
    CHECK(st.step == 1);
  }
  SUBCASE("identical parameters stay identical") {
    ParamSet p;
    p.add("w", {2});
    p.values() = {0.3, 0.3};
    AdamState st;
    for (int i = 0; i < 10; ++i) {
      p.grads() = {std::sin(i * 1.0), std::sin(i * 1.0)};
      adam_step(p, st, {});
    }
    CHECK(p.values()[0] == p.values()[1]);
  }
  SUBCASE("non-positive learning rate") {
    ParamSet p;
    p.add("w", {1});
    AdamState st;
    AdamOptions opt;
    opt.lr = 0.0;
    CHECK_THROWS_AS(adam_step(p, st, opt), std::invalid_argument);
  }
}

TEST_CASE("forward and backward are deterministic") {
  MlpSpec spec{{3, 16, 1}, Activation::Sine, 30};
  auto run = [&] {
    ParamSet p;
    add_mlp_params(p, spec);
    Rng rng(17);
    init_siren(p, spec, rng);
    const Tensor x({7, 3}, oracle::randu(21, 5));
    Graph g;
    auto l = sum(forward_mlp(g, p, g.constant(x), spec));
    g.backward(l);
    return std::make_pair(l.value().item(), p.grads());
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}
