#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dinr/nnkit/tensor.hpp"

namespace dinr::nn {

struct ParamEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;

  std::size_t size() const { return shape_size(shape); }
  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

// Flat weight vector with a matching gradient buffer. Entries are appended
// back to back, so the layout offsets always partition [0, size()).
class ParamSet {
 public:
  ParamSet() = default;

  // Appends a zero-initialized entry; names must be unique.
  void add(std::string name, Shape shape);

  bool contains(std::string_view name) const;
  const ParamEntry& entry(std::string_view name) const;
  const std::vector<ParamEntry>& layout() const { return layout_; }

  std::span<double> values(std::string_view name);
  std::span<const double> values(std::string_view name) const;
  std::span<double> grads(std::string_view name);
  std::span<const double> grads(std::string_view name) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& grads() { return grads_; }
  const std::vector<double>& grads() const { return grads_; }

  std::size_t size() const { return values_.size(); }
  void zero_grad();

  // 64-bit FNV-1a over the raw value bytes; used to audit warm starts.
  std::uint64_t hash() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.layout_ == b.layout_ && a.values_ == b.values_;
  }

 private:
  std::vector<ParamEntry> layout_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

// Binary weights format:
//   magic "DINRW001"
//   u32 entry count
//   per entry: u32 name length, name bytes, u32 rank, u32 dims[rank], u64 offset
//   f32 values[total], little endian
// Values are rounded to float32 on write.
void write_params(std::ostream& out, const ParamSet& params);
ParamSet read_params(std::istream& in);

inline constexpr std::string_view kWeightsMagic = "DINRW001";

}  // namespace dinr::nn
