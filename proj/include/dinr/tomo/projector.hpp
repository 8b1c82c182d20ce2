#pragma once

#include <string>
#include <vector>

#include "dinr/tomo/geometry.hpp"

namespace dinr::tomo {

// Matched Joseph forward/adjoint pair for one geometry.
//
// Each ray is marched one row (or column, whichever is closer to the ray
// direction) at a time, linearly interpolating between the two nearest
// pixels and weighting by the path length per step. The adjoint scatters
// with exactly the same weights, so <A x, y> == <x, A^T y> to rounding.
// Rays outside the inscribed circle (|offset| > N/2) are zero.
class Projector {
 public:
  explicit Projector(Geometry geom);

  const Geometry& geometry() const { return geom_; }

  // (S, N, N) -> (S, n_views, n_detectors)
  Tensor forward(const Tensor& volume) const;
  // (S, n_views, n_detectors) -> (S, N, N)
  Tensor adjoint(const Tensor& sinogram) const;

 private:
  struct Tap {
    std::size_t pixel;
    double weight;
  };
  struct Ray {
    std::size_t begin;  // into taps_
    std::size_t end;
  };

  void build();

  Geometry geom_;
  std::vector<Tap> taps_;
  std::vector<Ray> rays_;  // view-major, n_views * n_detectors
};

Sinogram project(const Volume& vol, const Geometry& geom);
// Exact transpose of project().
Volume backproject(const Sinogram& sino);

enum class Apodization { RamLak, Hann };
std::string to_string(Apodization a);
Apodization apodization_from_string(const std::string& s);

// Ramp-filtered (optionally Hann-windowed) pixel-driven backprojection,
// scaled by pi / n_views.
Volume fbp(const Sinogram& sino, Apodization apod = Apodization::RamLak);

}  // namespace dinr::tomo
