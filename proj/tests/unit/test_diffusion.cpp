#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/oracles.hpp"
#include "dinr/diffusion/denoiser.hpp"
#include "dinr/diffusion/pretrain.hpp"
#include "dinr/diffusion/sampling.hpp"
#include "dinr/diffusion/schedule.hpp"
#include "dinr/errors.hpp"

using namespace dinr;
using namespace dinr::diffusion;

namespace {

NoiseSchedule manual_schedule(std::vector<double> alphas) {
  NoiseSchedule s;
  s.alphas = alphas;
  s.betas.resize(alphas.size());
  s.train_steps.resize(alphas.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    s.betas[i] = 1.0 - alphas[i] / prev;
    s.train_steps[i] = static_cast<double>(i + 1);
    prev = alphas[i];
  }
  return s;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// 3 sigma band for a Gaussian sample variance.
bool within_3sigma(double observed, double expected, std::size_t n) {
  return std::abs(observed - expected) <= 3 * expected * std::sqrt(2.0 / (n - 1));
}

}  // namespace

TEST_CASE("schedules") {
  SUBCASE("two steps") {
    const auto s = make_schedule(2, ScheduleKind::LinearBeta);
    CHECK(s.alpha_bar(1) > s.alpha_bar(2));
    CHECK((s.alpha_bar(2) > 0.0 && s.alpha_bar(1) < 1.0));
    CHECK(s.alpha_bar(0) == 1.0);
  }
  SUBCASE("linear beta at T = 1000 matches the product") {
    const auto s = make_schedule(1000, ScheduleKind::LinearBeta);
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) {
      const double beta = 1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0;
      prod *= 1.0 - beta;
      if (t % 100 == 0) CHECK(std::abs(s.alpha_bar(t) - prod) < 1e-12);
    }
    CHECK(s.alpha_bar(1000) < 0.01);
  }
  SUBCASE("cosine starts near one") {
    const auto s = make_schedule(1000, ScheduleKind::Cosine);
    CHECK(s.alpha_bar(1) > 0.99);
    const double f0 = std::pow(std::cos(0.008 / 1.008 * std::numbers::pi / 2), 2);
    const double f1 = std::pow(std::cos((0.001 + 0.008) / 1.008 * std::numbers::pi / 2), 2);
    CHECK(s.alpha_bar(1) == doctest::Approx(f1 / f0).epsilon(1e-12));
  }
  SUBCASE("strictly decreasing in (0, 1]") {
    for (auto kind : {ScheduleKind::LinearBeta, ScheduleKind::Cosine})
      for (std::size_t T : {2, 10, 25, 1000}) {
        const auto s = make_schedule(T, kind);
        for (std::size_t t = 1; t <= T; ++t) {
          CHECK(s.alpha_bar(t) > 0.0);
          CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
      }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(make_schedule(1, ScheduleKind::LinearBeta), std::invalid_argument);
    const auto s = make_schedule(10, ScheduleKind::LinearBeta);
    CHECK_THROWS_AS(s.alpha_bar(11), std::out_of_range);
    auto bad = manual_schedule({0.5, 0.6});
    CHECK_THROWS(bad.validate());
  }
  SUBCASE("strided") {
    const auto train = make_schedule(1000, ScheduleKind::LinearBeta);
    const auto s = stride_schedule(train, 25);
    REQUIRE(s.T() == 25);
    for (std::size_t t = 1; t <= 25; ++t) {
      CHECK(s.train_step(t) == 40.0 * t);
      CHECK(s.alpha_bar(t) == train.alpha_bar(40 * t));
    }
    CHECK(s.alpha_bar(25) < 1e-3);
  }
  SUBCASE("serialization round trip") {
    for (auto s : {make_schedule(50, ScheduleKind::Cosine), stride_schedule(make_schedule(1000, ScheduleKind::LinearBeta), 25)}) {
      std::stringstream ss;
      write_schedule(ss, s);
      const auto back = read_schedule(ss);
      CHECK(back == s);
      CHECK_NOTHROW(back.validate());
    }
  }
}

TEST_CASE("q_sample") {
  const auto s = make_schedule(100, ScheduleKind::LinearBeta);
  const Tensor x0({1, 4, 4}, oracle::randn(16, 1));
  SUBCASE("zero noise scales the signal") {
    const auto out = q_sample(x0, 30, Tensor({1, 4, 4}), s);
    for (std::size_t i = 0; i < 16; ++i) CHECK(out[i] == std::sqrt(s.alpha_bar(30)) * x0[i]);
  }
  SUBCASE("identity limit") {
    const auto near = manual_schedule({1.0 - 1e-12, 0.5});
    const auto out = q_sample(x0, 1, standard_normal({1, 4, 4}, 3), near);
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(out[i] - x0[i]) < 1e-5);
  }
  SUBCASE("variance of pure noise") {
    const std::size_t n = 10000;
    const Tensor zero({n});
    const auto out = q_sample(zero, 40, standard_normal({n}, 9), s);
    CHECK(within_3sigma(sample_variance(out.storage()), 1.0 - s.alpha_bar(40), n));
  }
  SUBCASE("oracle noise recovers the signal") {
    const auto eps = standard_normal({1, 4, 4}, 5);
    for (std::size_t t : {1, 50, 100}) {
      const auto xt = q_sample(x0, t, eps, s);
      const double a = s.alpha_bar(t);
      for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs((xt[i] - std::sqrt(1 - a) * eps[i]) / std::sqrt(a) - x0[i]) < 1e-6);
    }
  }
  SUBCASE("range and shape errors") {
    CHECK_THROWS_AS(q_sample(x0, 0, x0, s), std::out_of_range);
    CHECK_THROWS_AS(q_sample(x0, 101, x0, s), std::out_of_range);
    CHECK_THROWS_AS(q_sample(x0, 5, Tensor({16}), s), ShapeError);
  }
}

TEST_CASE("ddim step") {
  const auto s = make_schedule(25, ScheduleKind::Cosine);
  const Tensor xh({1, 3, 3}, oracle::randn(9, 1));
  const Tensor et({1, 3, 3}, oracle::randn(9, 2));
  const Tensor es({1, 3, 3}, oracle::randn(9, 3));
  SUBCASE("t = 1 returns the estimate") {
    for (double eta : {0.0, 0.3, 1.0}) CHECK(ddim_step(xh, et, es, 1, eta, s) == xh);
  }
  SUBCASE("eta = 0 ignores the slerp noise") {
    const auto a = ddim_step(xh, et, es, 10, 0.0, s);
    const auto b = ddim_step(xh, et, Tensor({1, 3, 3}, 7.0), 10, 0.0, s);
    CHECK(a == b);
    const double ab = s.alpha_bar(9);
    for (std::size_t i = 0; i < 9; ++i) CHECK(a[i] == doctest::Approx(std::sqrt(ab) * xh[i] + std::sqrt(1 - ab) * et[i]).epsilon(1e-14));
  }
  SUBCASE("scalar arithmetic") {
    const auto sched = manual_schedule({0.25, 0.1});
    const auto out = ddim_step(Tensor::vector({2.0}), Tensor::vector({-1.0}), Tensor::vector({1.0}), 2, 0.5, sched);
    CHECK(std::abs(out[0] - 1.0) < 1e-12);
  }
  SUBCASE("affine superposition") {
    const Tensor x2({1, 3, 3}, oracle::randn(9, 4));
    const Tensor e2({1, 3, 3}, oracle::randn(9, 5));
    const double a = 0.35;
    const auto mixed = ddim_step(a * xh + (1 - a) * x2, a * et + (1 - a) * e2, es, 7, 0.4, s);
    const auto sep = a * ddim_step(xh, et, es, 7, 0.4, s) + (1 - a) * ddim_step(x2, e2, es, 7, 0.4, s);
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(mixed[i] - sep[i]) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(ddim_step(xh, et, es, 3, 1.5, s), std::invalid_argument);
    CHECK_THROWS_AS(ddim_step(xh, et, es, 3, -0.1, s), std::invalid_argument);
    CHECK_THROWS_AS(ddim_step(xh, et, es, 0, 0.0, s), std::out_of_range);
    CHECK_THROWS_AS(ddim_step(xh, et, es, 26, 0.0, s), std::out_of_range);
  }
}

TEST_CASE("slerp noise") {
  NoiseDraw draw{standard_normal({1, 8, 8}, 100), 0.0};
  SUBCASE("endpoints") {
    CHECK(slerp_noise(draw, 7, 3) == draw.reference);
    draw.lambda = 1.0;
    const auto fresh = standard_normal({1, 8, 8}, derive_seed(7, 3));
    const auto out = slerp_noise(draw, 7, 3);
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(out[i] - fresh[i]) < 1e-12);
  }
  SUBCASE("matches the great circle formula") {
    const Tensor a = Tensor::vector({1, 0}), b = Tensor::vector({0, 2});
    const auto out = slerp(a, b, 0.5);
    // gamma = pi/2: weights sin(pi/4) on both
    CHECK(out[0] == doctest::Approx(std::sin(std::numbers::pi / 4)));
    CHECK(out[1] == doctest::Approx(2 * std::sin(std::numbers::pi / 4)));
  }
  SUBCASE("colinear draws fall back to the reference") {
    const Tensor a = Tensor::vector({1, 2, 3});
    CHECK(slerp(a, 2.0 * a, 0.5) == a);
  }
  SUBCASE("unit variance") {
    draw.lambda = 0.2;
    std::vector<double> all;
    for (std::size_t k = 0; k < 1000; ++k) {
      draw.reference = standard_normal({1, 8, 8}, derive_seed(55, k));
      const auto out = slerp_noise(draw, 1234, k);
      all.insert(all.end(), out.storage().begin(), out.storage().end());
    }
    const double v = sample_variance(all);
    MESSAGE("slerp variance " << v);
    CHECK((v >= 0.9 && v <= 1.1));
  }
  SUBCASE("uninitialized reference") {
    CHECK_THROWS_AS(slerp_noise(NoiseDraw{}, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("denoiser model") {
  const auto sched = stride_schedule(make_schedule(1000, ScheduleKind::LinearBeta), 25);
  auto model = DenoiserModel::create(DenoiserModel::default_arch(), sched, 3);
  SUBCASE("noise prediction keeps the volume shape") {
    const auto x = standard_normal({2, 16, 16}, 1);
    CHECK(predict_noise(model, x, 400.0).shape() == x.shape());
    CHECK_THROWS_AS(predict_noise(model, Tensor({16, 16}), 1.0), ShapeError);
  }
  SUBCASE("denoise inverts the forward process for the predicted noise") {
    const auto x = standard_normal({1, 8, 8}, 2);
    nn::Graph g;
    nn::Var eps;
    const auto x0 = denoise(g, model, g.constant(x), 0.3, 500.0, &eps).value();
    for (std::size_t i = 0; i < 64; ++i)
      CHECK(x0[i] == doctest::Approx((x[i] - std::sqrt(0.7) * eps.value()[i]) / std::sqrt(0.3)).epsilon(1e-12));
  }
  SUBCASE("weights file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "dinr_test_weights.bin";
    save_denoiser(path, model);
    const auto back = load_denoiser(path);
    CHECK(back.arch.describe() == model.arch.describe());
    CHECK(back.schedule == model.schedule);
    CHECK(back.params.layout() == model.params.layout());
    for (std::size_t i = 0; i < model.params.size(); ++i)
      CHECK(back.params.values()[i] == static_cast<double>(static_cast<float>(model.params.values()[i])));
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
    CHECK_THROWS_AS(load_denoiser(path), FormatError);
    std::filesystem::remove(path);
  }
  SUBCASE("deterministic reverse pass") {
    auto run = [&] {
      Tensor x = standard_normal({1, 16, 16}, 11);
      const NoiseDraw draw{standard_normal({1, 16, 16}, 12), 0.2};
      for (std::size_t t = sched.T(); t >= 1; --t) {
        const auto eps = predict_noise(model, x, sched.train_step(t));
        Tensor xh(x.shape());
        const double a = sched.alpha_bar(t);
        for (std::size_t i = 0; i < x.size(); ++i) xh[i] = (x[i] - std::sqrt(1 - a) * eps[i]) / std::sqrt(a);
        x = ddim_step(xh, eps, slerp_noise(draw, 13, t), t, 0.0, sched);
      }
      return x;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("pretraining") {
  const auto sched = make_schedule(100, ScheduleKind::LinearBeta);
  auto arch = nn::ConvSpec::stack(1, {8, 8}, 1, 3);
  SUBCASE("zero epochs leaves weights") {
    auto model = DenoiserModel::create(arch, sched, 4);
    const auto before = model.params;
    PretrainOptions opt;
    opt.epochs = 0;
    const auto rep = pretrain(model, {tomo::Volume(1, 16)}, opt);
    CHECK(rep.epoch_loss.empty());
    CHECK(model.params == before);
  }
  SUBCASE("empty dataset") {
    auto model = DenoiserModel::create(arch, sched, 4);
    CHECK_THROWS(pretrain(model, {}, PretrainOptions{}));
  }
  SUBCASE("non-finite data aborts") {
    auto model = DenoiserModel::create(arch, sched, 4);
    tomo::Volume bad(1, 8);
    bad.data[5] = std::nan("");
    CHECK_THROWS_AS(pretrain(model, {bad}, PretrainOptions{}), DivergenceError);
  }
  SUBCASE("learns noise on a constant dataset") {
    auto model = DenoiserModel::create(arch, sched, 5);
    std::vector<tomo::Volume> data(16, tomo::Volume(1, 32));
    PretrainOptions opt;
    opt.epochs = 20;
    opt.lr = 2e-3;
    opt.batch_size = 4;
    opt.seed = 8;
    std::vector<double> seen;
    const auto rep = pretrain(model, data, opt, [&](std::size_t, double l) { seen.push_back(l); });
    REQUIRE(rep.epoch_loss.size() == 20);
    CHECK(seen == rep.epoch_loss);
    CHECK(rep.epoch_loss.back() <= rep.epoch_loss.front());

    const auto eps = standard_normal({1, 32, 32}, 77);
    const double a = sched.alpha_bar(90);
    const auto pred = predict_noise(model, std::sqrt(1 - a) * eps, sched.train_step(90));
    const double cosine = nn::dot(pred, eps) / std::sqrt(nn::squared_norm(pred) * nn::squared_norm(eps));
    MESSAGE("cosine similarity " << cosine);
    CHECK(cosine > 0.5);
  }
  SUBCASE("same seed, same weights") {
    std::vector<tomo::Volume> data;
    for (unsigned i = 0; i < 4; ++i) data.emplace_back(Tensor({1, 8, 8}, oracle::randu(64, i)));
    PretrainOptions opt;
    opt.epochs = 2;
    opt.batch_size = 3;
    opt.seed = 1;
    auto m1 = DenoiserModel::create(arch, sched, 6);
    auto m2 = DenoiserModel::create(arch, sched, 6);
    const auto r1 = pretrain(m1, data, opt), r2 = pretrain(m2, data, opt);
    CHECK(r1.epoch_loss == r2.epoch_loss);
    CHECK(m1.params == m2.params);
  }
}
