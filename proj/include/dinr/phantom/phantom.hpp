#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dinr/tomo/geometry.hpp"

// Synthetic data: random-ellipse images for denoiser pretraining and a
// concrete-like microstructure phantom (matrix disc, aggregates, pores).
//
// Shapes are described in normalized coordinates where the image spans
// [-1, 1] on both axes (column -> u, row -> v) and pixel centres sit at
// (j - (N-1)/2) / (N/2).
namespace dinr::phantom {

using tomo::Tensor;
using tomo::Volume;

struct EllipseSpec {
  double cx = 0.0;
  double cy = 0.0;
  double a = 0.5;  // semi-axis along the rotated u direction
  double b = 0.5;
  double rotation = 0.0;  // radians
  double intensity = 1.0;  // additive

  void validate() const;
};

template <typename T>
struct Range {
  T lo;
  T hi;
};

struct PhantomConfig {
  std::size_t image_size = 64;
  std::size_t n_slices = 2;

  // Random-ellipse images.
  Range<int> ellipse_count{1, 8};
  Range<double> ellipse_intensity{0.1, 1.0};
  Range<double> ellipse_axis{0.05, 0.5};
  double ellipse_center_extent = 0.6;  // centres drawn from [-e, e]^2

  // Microstructure phantom.
  double matrix_radius = 0.85;
  double matrix_intensity = 0.5;
  Range<int> aggregate_count{6, 10};
  Range<double> aggregate_radius{0.08, 0.2};
  Range<double> aggregate_intensity{0.7, 0.9};
  Range<int> pore_count{8, 16};
  Range<double> pore_radius{0.03, 0.06};
  double min_gap = 0.02;        // clearance between placed discs
  double radius_jitter = 0.15;  // later slices shrink radii by up to this fraction
  int retry_budget = 1000;      // placement attempts per disc

  std::uint64_t seed = 0;

  void validate() const;
};

// Sum of ellipse indicators (pixel centre inside), clipped to [0, 1] and
// zeroed outside the inscribed circle. Returns an (N, N) tensor.
Tensor render_ellipses(std::size_t size, const std::vector<EllipseSpec>& ellipses);

std::vector<EllipseSpec> random_ellipses(const PhantomConfig& cfg, std::uint64_t seed);
// One-slice volume of random_ellipses(cfg, seed).
Volume random_ellipse_image(const PhantomConfig& cfg, std::uint64_t seed);

struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  double intensity = 0.0;
};

struct MicrostructureLayout {
  Disc matrix;
  // Per slice: aggregates first, then pores.
  std::vector<std::vector<Disc>> aggregates;
  std::vector<std::vector<Disc>> pores;
};

// Throws Error when a disc cannot be placed within the retry budget.
MicrostructureLayout microstructure_layout(const PhantomConfig& cfg);
Volume render_microstructure(std::size_t size, const MicrostructureLayout& layout);
Volume microstructure_phantom(const PhantomConfig& cfg);

// n images seeded base_seed + i, mapped to [-1, 1] by x -> 2x - 1.
std::vector<Volume> ellipse_dataset(const PhantomConfig& cfg, std::size_t n, std::uint64_t base_seed);

// Modified (Toft) Shepp-Logan head phantom, one slice, values in [0, 1].
Volume shepp_logan(std::size_t size);

// Writes sample_<i>.dinrt files and manifest.txt ("index seed path" lines).
void write_dataset(const std::filesystem::path& dir, const std::vector<Volume>& samples, std::uint64_t base_seed);

}  // namespace dinr::phantom
