#pragma once

#include <string>
#include <vector>

#include "dinr/nnkit/graph.hpp"
#include "dinr/rng.hpp"

namespace dinr::nn {

enum class Activation { Sine, Relu, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected stack. widths = {in, hidden..., out}; the activation is
// applied after every layer except the last.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::Sine;
  double w0 = 30.0;

  std::size_t layers() const { return widths.size() - 1; }
  std::size_t in_width() const { return widths.front(); }
  std::size_t out_width() const { return widths.back(); }
};

// Adds "fc{i}.weight" (out, in) and "fc{i}.bias" (out) entries.
void add_mlp_params(ParamSet& params, const MlpSpec& spec);
// SIREN scheme: first layer U(-1/n, 1/n), later layers U(-sqrt(6/n)/w0, +);
// biases U(-1/sqrt(n), 1/sqrt(n)).
void init_siren(ParamSet& params, const MlpSpec& spec, Rng& rng);

// input: (N, in_width) -> (N, out_width)
Var forward_mlp(Graph& g, ParamSet& params, Var input, const MlpSpec& spec);

struct ConvLayerSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
};

// Plain conv stack with ReLU between layers. The timestep embedding is
// added per channel to the output of the first layer (after its
// activation when the first layer is not also the last).
struct ConvSpec {
  std::vector<ConvLayerSpec> layers;

  // in -> widths... -> out with square `kernel` everywhere.
  static ConvSpec stack(std::size_t in_channels, const std::vector<std::size_t>& widths, std::size_t out_channels,
                        std::size_t kernel);
  std::size_t in_channels() const { return layers.front().in_channels; }
  std::size_t out_channels() const { return layers.back().out_channels; }
  std::size_t embed_channels() const { return layers.front().out_channels; }
  std::string describe() const;
  static ConvSpec parse(const std::string& desc);
};

// Adds "conv{i}.weight" (Co, Ci, k, k) and "conv{i}.bias" (Co).
void add_conv_params(ParamSet& params, const ConvSpec& spec);
// He-uniform weights, zero biases.
void init_conv(ParamSet& params, const ConvSpec& spec, Rng& rng);

// input: (N, C, H, W) or (C, H, W); t_embed: (embed_channels).
// Output keeps the input's rank.
Var forward_convnet(Graph& g, ParamSet& params, Var input, const ConvSpec& spec, const Tensor& t_embed);

// Standard sinusoidal embedding of a (possibly fractional) timestep.
Tensor timestep_embedding(double t, std::size_t dim);

}  // namespace dinr::nn
