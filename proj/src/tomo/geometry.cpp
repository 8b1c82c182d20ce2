#include "dinr/tomo/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dinr/errors.hpp"

namespace dinr::tomo {

void Geometry::validate() const {
  if (angles.empty()) throw GeometryError("geometry has no views");
  if (image_size == 0) throw GeometryError("geometry image size must be positive");
  if (n_detectors == 0) throw GeometryError("geometry needs at least one detector");
  if (!(detector_spacing > 0.0)) throw GeometryError("detector spacing must be positive");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double a = angles[i];
    if (!(a >= 0.0 && a < std::numbers::pi)) {
      throw GeometryError(fmt::format("angle {} = {} rad outside [0, pi)", i, a));
    }
    if (i > 0 && !(a > angles[i - 1])) {
      throw GeometryError(fmt::format("angles must be strictly increasing (index {})", i));
    }
  }
  if (!covers_object()) {
    spdlog::warn("detector span {} px is smaller than the image diagonal {:.2f} px; object may be truncated",
                 static_cast<double>(n_detectors) * detector_spacing,
                 std::sqrt(2.0) * static_cast<double>(image_size));
  }
}

bool Geometry::covers_object() const {
  return static_cast<double>(n_detectors) >= std::sqrt(2.0) * static_cast<double>(image_size) / detector_spacing;
}

std::size_t default_detector_count(std::size_t image_size, double detector_spacing) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * static_cast<double>(image_size) / detector_spacing));
}

Geometry Geometry::uniform(std::size_t n_views, std::size_t image_size, std::size_t n_detectors,
                           double detector_spacing) {
  Geometry g;
  g.image_size = image_size;
  g.detector_spacing = detector_spacing;
  g.n_detectors = n_detectors == 0 ? default_detector_count(image_size, detector_spacing) : n_detectors;
  g.angles.resize(n_views);
  for (std::size_t k = 0; k < n_views; ++k) {
    g.angles[k] = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_views);
  }
  return g;
}

Geometry subsample_views(const Geometry& geom, std::size_t factor) {
  if (factor < 1) throw std::invalid_argument("subsample factor must be >= 1");
  if (factor > geom.n_views()) {
    throw GeometryError(fmt::format("subsample factor {} exceeds {} views", factor, geom.n_views()));
  }
  Geometry out = geom;
  out.angles.clear();
  for (std::size_t i = 0; i < geom.n_views(); i += factor) out.angles.push_back(geom.angles[i]);
  return out;
}

Volume::Volume(Tensor t) : data(std::move(t)) {
  if (data.rank() != 3) {
    throw ShapeError(fmt::format("volume must be (slices, H, W), got {}", nn::shape_string(data.shape())));
  }
  if (data.dim(1) != data.dim(2)) {
    throw ShapeError(fmt::format("volume slices must be square, got {}x{}", data.dim(1), data.dim(2)));
  }
}

Sinogram::Sinogram(Geometry g, Tensor t) : geometry(std::move(g)), data(std::move(t)) {
  if (data.rank() != 3 || data.dim(1) != geometry.n_views() || data.dim(2) != geometry.n_detectors) {
    throw GeometryError(fmt::format("sinogram shape {} inconsistent with geometry ({} views, {} detectors)",
                                    nn::shape_string(data.shape()), geometry.n_views(), geometry.n_detectors));
  }
}

}  // namespace dinr::tomo
