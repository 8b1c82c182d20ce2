#include "dinr/nnkit/layers.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "dinr/errors.hpp"
#include "dinr/nnkit/ops.hpp"

namespace dinr::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sine: return "sine";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "sine") return Activation::Sine;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw ConfigError(fmt::format("unknown activation '{}'", s));
}

namespace {
std::string fc_name(std::size_t i, const char* what) { return fmt::format("fc{}.{}", i, what); }
std::string conv_name(std::size_t i, const char* what) { return fmt::format("conv{}.{}", i, what); }

void fill_uniform(std::span<double> v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}
}  // namespace

void add_mlp_params(ParamSet& params, const MlpSpec& spec) {
  if (spec.widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  for (std::size_t i = 0; i < spec.layers(); ++i) {
    params.add(fc_name(i, "weight"), {spec.widths[i + 1], spec.widths[i]});
    params.add(fc_name(i, "bias"), {spec.widths[i + 1]});
  }
}

void init_siren(ParamSet& params, const MlpSpec& spec, Rng& rng) {
  for (std::size_t i = 0; i < spec.layers(); ++i) {
    const auto n = static_cast<double>(spec.widths[i]);
    const double wb = i == 0 ? 1.0 / n : std::sqrt(6.0 / n) / spec.w0;
    fill_uniform(params.values(fc_name(i, "weight")), wb, rng);
    fill_uniform(params.values(fc_name(i, "bias")), 1.0 / std::sqrt(n), rng);
  }
}

Var forward_mlp(Graph& g, ParamSet& params, Var input, const MlpSpec& spec) {
  const Shape s = input.shape();
  if (s.size() != 2 || s[1] != spec.in_width()) {
    throw ShapeError(fmt::format("forward_mlp: input {} does not match input width {}", shape_string(s),
                                 spec.in_width()));
  }
  Var h = input;
  for (std::size_t i = 0; i < spec.layers(); ++i) {
    const auto& we = params.entry(fc_name(i, "weight"));
    if (we.shape != Shape{spec.widths[i + 1], spec.widths[i]}) {
      throw ShapeError(fmt::format("forward_mlp: parameter layout does not match layer {}", i));
    }
    h = linear(h, g.parameter(params, we.name), g.parameter(params, fc_name(i, "bias")));
    if (i + 1 == spec.layers()) break;
    switch (spec.activation) {
      case Activation::Sine: h = sine(h, spec.w0); break;
      case Activation::Relu: h = relu(h); break;
      case Activation::Identity: break;
    }
  }
  return h;
}

ConvSpec ConvSpec::stack(std::size_t in_channels, const std::vector<std::size_t>& widths, std::size_t out_channels,
                         std::size_t kernel) {
  ConvSpec spec;
  std::size_t prev = in_channels;
  for (auto w : widths) {
    spec.layers.push_back({prev, w, kernel});
    prev = w;
  }
  spec.layers.push_back({prev, out_channels, kernel});
  return spec;
}

std::string ConvSpec::describe() const {
  std::string s = std::to_string(layers.front().in_channels);
  for (const auto& l : layers) s += fmt::format("-{}k{}", l.out_channels, l.kernel);
  return s;
}

ConvSpec ConvSpec::parse(const std::string& desc) {
  ConvSpec spec;
  std::istringstream in(desc);
  std::size_t prev = 0;
  if (!(in >> prev)) throw FormatError(fmt::format("bad conv descriptor '{}'", desc));
  char dash = 0, k = 0;
  std::size_t out = 0, kernel = 0;
  while (in >> dash >> out >> k >> kernel) {
    if (dash != '-' || k != 'k') throw FormatError(fmt::format("bad conv descriptor '{}'", desc));
    spec.layers.push_back({prev, out, kernel});
    prev = out;
  }
  if (spec.layers.empty()) throw FormatError(fmt::format("bad conv descriptor '{}'", desc));
  return spec;
}

void add_conv_params(ParamSet& params, const ConvSpec& spec) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    params.add(conv_name(i, "weight"), {l.out_channels, l.in_channels, l.kernel, l.kernel});
    params.add(conv_name(i, "bias"), {l.out_channels});
  }
}

void init_conv(ParamSet& params, const ConvSpec& spec, Rng& rng) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto fan_in = static_cast<double>(l.in_channels * l.kernel * l.kernel);
    fill_uniform(params.values(conv_name(i, "weight")), std::sqrt(6.0 / fan_in), rng);
    auto b = params.values(conv_name(i, "bias"));
    std::fill(b.begin(), b.end(), 0.0);
  }
}

Var forward_convnet(Graph& g, ParamSet& params, Var input, const ConvSpec& spec, const Tensor& t_embed) {
  const Shape s = input.shape();
  const bool batched = s.size() == 4;
  if (!batched && s.size() != 3) {
    throw ShapeError(fmt::format("forward_convnet: expected (C,H,W) or (N,C,H,W), got {}", shape_string(s)));
  }
  const std::size_t c = batched ? s[1] : s[0];
  if (c != spec.in_channels()) {
    throw ShapeError(fmt::format("forward_convnet: input has {} channels, network expects {}", c, spec.in_channels()));
  }
  if (t_embed.shape() != Shape{spec.embed_channels()}) {
    throw ShapeError(fmt::format("forward_convnet: t_embed must have shape ({})", spec.embed_channels()));
  }
  Var h = batched ? input : reshape(input, {1, s[0], s[1], s[2]});
  const Var emb = g.constant(t_embed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto& we = params.entry(conv_name(i, "weight"));
    if (we.shape != Shape{l.out_channels, l.in_channels, l.kernel, l.kernel}) {
      throw ShapeError(fmt::format("forward_convnet: parameter layout does not match layer {}", i));
    }
    h = conv2d(h, g.parameter(params, we.name), g.parameter(params, conv_name(i, "bias")));
    const bool last = i + 1 == spec.layers.size();
    if (!last) h = relu(h);
    if (i == 0) h = add_channel(h, emb);
  }
  return batched ? h : reshape(h, {spec.out_channels(), s[1], s[2]});
}

Tensor timestep_embedding(double t, std::size_t dim) {
  Tensor e({dim});
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(t * freq);
    e[half + i] = std::cos(t * freq);
  }
  if (dim % 2 == 1) e[dim - 1] = 0.0;
  return e;
}

}  // namespace dinr::nn
