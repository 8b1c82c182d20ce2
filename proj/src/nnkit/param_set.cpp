#include "dinr/nnkit/param_set.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "dinr/binary_io.hpp"
#include "dinr/errors.hpp"

namespace dinr::nn {

void ParamSet::add(std::string name, Shape shape) {
  if (contains(name)) {
    throw ShapeError(fmt::format("duplicate parameter '{}'", name));
  }
  ParamEntry e{std::move(name), std::move(shape), values_.size()};
  values_.resize(values_.size() + e.size(), 0.0);
  grads_.resize(values_.size(), 0.0);
  layout_.push_back(std::move(e));
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(layout_.begin(), layout_.end(), [&](const ParamEntry& e) { return e.name == name; });
}

const ParamEntry& ParamSet::entry(std::string_view name) const {
  for (const auto& e : layout_) {
    if (e.name == name) return e;
  }
  throw ShapeError(fmt::format("no parameter named '{}'", name));
}

std::span<double> ParamSet::values(std::string_view name) {
  const auto& e = entry(name);
  return std::span<double>(values_).subspan(e.offset, e.size());
}

std::span<const double> ParamSet::values(std::string_view name) const {
  const auto& e = entry(name);
  return std::span<const double>(values_).subspan(e.offset, e.size());
}

std::span<double> ParamSet::grads(std::string_view name) {
  const auto& e = entry(name);
  return std::span<double>(grads_).subspan(e.offset, e.size());
}

std::span<const double> ParamSet::grads(std::string_view name) const {
  const auto& e = entry(name);
  return std::span<const double>(grads_).subspan(e.offset, e.size());
}

void ParamSet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

std::uint64_t ParamSet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values_) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_params(std::ostream& out, const ParamSet& params) {
  binio::write_bytes(out, kWeightsMagic);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.layout().size()));
  for (const auto& e : params.layout()) {
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    binio::write_bytes(out, e.name);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    binio::write_le<std::uint64_t>(out, e.offset);
  }
  for (double v : params.values()) binio::write_le<float>(out, static_cast<float>(v));
  if (!out) throw FormatError("failed writing weights");
}

ParamSet read_params(std::istream& in) {
  binio::expect_magic(in, kWeightsMagic);
  const auto count = binio::read_le<std::uint32_t>(in);
  ParamSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = binio::read_le<std::uint32_t>(in);
    std::string name = binio::read_bytes(in, name_len);
    const auto rank = binio::read_le<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = binio::read_le<std::uint32_t>(in);
    const auto offset = binio::read_le<std::uint64_t>(in);
    if (offset != params.size()) {
      throw FormatError(fmt::format("parameter '{}' offset {} breaks the contiguous layout", name, offset));
    }
    params.add(std::move(name), std::move(shape));
  }
  for (double& v : params.values()) v = binio::read_le<float>(in);
  return params;
}

}  // namespace dinr::nn
