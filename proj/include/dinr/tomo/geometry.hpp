#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "dinr/nnkit/tensor.hpp"

namespace dinr::tomo {

using nn::Tensor;

// Parallel-beam acquisition geometry for square N x N slices.
//
// Conventions: the rotation centre is the image centre ((N-1)/2, (N-1)/2);
// at angle 0 rays travel along +y (down the rows) and detector bins run
// left to right with the columns. Bin k sits at offset
// (k - (n_detectors-1)/2) * detector_spacing from the centre ray.
struct Geometry {
  std::vector<double> angles;  // radians, strictly increasing in [0, pi)
  std::size_t n_detectors = 0;
  double detector_spacing = 1.0;
  std::size_t image_size = 0;

  std::size_t n_views() const { return angles.size(); }

  // Throws GeometryError on invalid angles/sizes. Logs a warning when the
  // detector does not span the image diagonal.
  void validate() const;
  bool covers_object() const;

  // n_views angles k*pi/n_views, k = 0..n_views-1.
  static Geometry uniform(std::size_t n_views, std::size_t image_size, std::size_t n_detectors = 0,
                          double detector_spacing = 1.0);

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Smallest detector count whose span covers the image diagonal.
std::size_t default_detector_count(std::size_t image_size, double detector_spacing = 1.0);

// Keeps every factor-th view starting at index 0, i.e. ceil(n/factor) views.
Geometry subsample_views(const Geometry& geom, std::size_t factor);

// View counts of the sparse real-data scans (545 views over 180 degrees
// reported as 5, 9, 17 and 33 views); exposed directly because they do not
// follow from the stated subsampling factors.
inline constexpr std::array<std::size_t, 4> kSparseViewPresets{5, 9, 17, 33};

// Attenuation stack (slices, H, W) with H == W; unit pixel size.
struct Volume {
  Tensor data;
  double pixel_size = 1.0;

  Volume() = default;
  explicit Volume(Tensor t);
  Volume(std::size_t slices, std::size_t size) : Volume(Tensor({slices, size, size})) {}

  std::size_t slices() const { return data.dim(0); }
  std::size_t size() const { return data.dim(1); }
};

// Line-integral data (slices, n_views, n_detectors) plus its geometry.
struct Sinogram {
  Geometry geometry;
  Tensor data;

  Sinogram() = default;
  Sinogram(Geometry g, Tensor t);

  std::size_t slices() const { return data.dim(0); }
};

}  // namespace dinr::tomo
