#include "dinr/diffusion/denoiser.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "dinr/binary_io.hpp"
#include "dinr/errors.hpp"
#include "dinr/nnkit/ops.hpp"

namespace dinr::diffusion {

nn::ConvSpec DenoiserModel::default_arch() { return nn::ConvSpec::stack(1, {16, 32, 32, 16}, 1, 3); }

DenoiserModel DenoiserModel::create(nn::ConvSpec arch, NoiseSchedule schedule, std::uint64_t seed) {
  DenoiserModel m;
  m.arch = std::move(arch);
  m.schedule = std::move(schedule);
  nn::add_conv_params(m.params, m.arch);
  Rng rng(seed);
  nn::init_conv(m.params, m.arch, rng);
  m.validate();
  return m;
}

void DenoiserModel::validate() const {
  nn::ParamSet expected;
  nn::add_conv_params(expected, arch);
  if (expected.layout() != params.layout()) {
    throw ShapeError(fmt::format("denoiser parameters do not match architecture {}", arch.describe()));
  }
  if (arch.in_channels() != 1 || arch.out_channels() != 1) {
    throw ShapeError("denoiser must map one channel to one channel");
  }
  schedule.validate();
}

nn::Var predict_noise(nn::Graph& g, DenoiserModel& model, nn::Var x, double train_step) {
  const nn::Shape s = x.shape();
  if (s.size() != 3) throw ShapeError(fmt::format("denoiser input must be (S,H,W), got {}", nn::shape_string(s)));
  const auto emb = nn::timestep_embedding(train_step, model.arch.embed_channels());
  auto x4 = nn::reshape(x, {s[0], 1, s[1], s[2]});
  auto out = nn::forward_convnet(g, model.params, x4, model.arch, emb);
  return nn::reshape(out, s);
}

Tensor predict_noise(DenoiserModel& model, const Tensor& x, double train_step) {
  nn::Graph g;
  return predict_noise(g, model, g.constant(x), train_step).value();
}

nn::Var denoise(nn::Graph& g, DenoiserModel& model, nn::Var x_t, double alpha_bar, double train_step,
                nn::Var* eps_out) {
  auto eps = predict_noise(g, model, x_t, train_step);
  if (eps_out != nullptr) *eps_out = eps;
  const double sa = std::sqrt(alpha_bar);
  const double sn = std::sqrt(1.0 - alpha_bar);
  return nn::scale(nn::sub(x_t, nn::scale(eps, sn)), 1.0 / sa);
}

void save_denoiser(const std::filesystem::path& path, const DenoiserModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path.string()));
  nn::write_params(out, model.params);
  const auto desc = model.arch.describe();
  binio::write_bytes(out, "ARCH");
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(desc.size()));
  binio::write_bytes(out, desc);
  binio::write_bytes(out, "SCHD");
  write_schedule(out, model.schedule);
  if (!out) throw FormatError(fmt::format("failed writing '{}'", path.string()));
}

DenoiserModel load_denoiser(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open weights '{}'", path.string()));
  DenoiserModel m;
  m.params = nn::read_params(in);
  binio::expect_magic(in, "ARCH");
  const auto len = binio::read_le<std::uint32_t>(in);
  m.arch = nn::ConvSpec::parse(binio::read_bytes(in, len));
  binio::expect_magic(in, "SCHD");
  m.schedule = read_schedule(in);
  m.validate();
  return m;
}

}  // namespace dinr::diffusion
