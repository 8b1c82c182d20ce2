#include "dinr/tomo/projector.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "dinr/errors.hpp"

namespace dinr::tomo {

Projector::Projector(Geometry geom) : geom_(std::move(geom)) {
  geom_.validate();
  build();
}

void Projector::build() {
  const std::size_t n = geom_.image_size;
  const auto nd = static_cast<double>(n);
  const double centre = (nd - 1.0) / 2.0;
  const double det_centre = (static_cast<double>(geom_.n_detectors) - 1.0) / 2.0;
  const double fov_radius = nd / 2.0;

  rays_.reserve(geom_.n_views() * geom_.n_detectors);
  for (double theta : geom_.angles) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const bool along_rows = std::abs(c) >= std::abs(s);
    const double step_len = 1.0 / (along_rows ? std::abs(c) : std::abs(s));
    for (std::size_t k = 0; k < geom_.n_detectors; ++k) {
      const double offset = (static_cast<double>(k) - det_centre) * geom_.detector_spacing;
      const std::size_t begin = taps_.size();
      if (std::abs(offset) <= fov_radius) {
        for (std::size_t m = 0; m < n; ++m) {
          // March coordinate (row y or column x), solve for the other one.
          const double t = static_cast<double>(m) - centre;
          const double other = along_rows ? (offset - t * s) / c : (offset - t * c) / s;
          const double f = other + centre;
          const double f0 = std::floor(f);
          const double frac = f - f0;
          const auto i0 = static_cast<std::ptrdiff_t>(f0);
          for (int side = 0; side < 2; ++side) {
            const std::ptrdiff_t idx = i0 + side;
            const double w = (side == 0 ? 1.0 - frac : frac) * step_len;
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n) || w == 0.0) continue;
            const auto u = static_cast<std::size_t>(idx);
            const std::size_t pixel = along_rows ? m * n + u : u * n + m;
            taps_.push_back({pixel, w});
          }
        }
      }
      rays_.push_back({begin, taps_.size()});
    }
  }
}

Tensor Projector::forward(const Tensor& volume) const {
  const std::size_t n = geom_.image_size;
  if (volume.rank() != 3 || volume.dim(1) != n || volume.dim(2) != n) {
    throw GeometryError(fmt::format("project: volume {} does not match geometry image size {}",
                                    nn::shape_string(volume.shape()), n));
  }
  const std::size_t slices = volume.dim(0);
  const std::size_t nr = rays_.size();
  Tensor out({slices, geom_.n_views(), geom_.n_detectors});
  for (std::size_t sl = 0; sl < slices; ++sl) {
    const double* img = volume.data().data() + sl * n * n;
    double* sino = out.data().data() + sl * nr;
    for (std::size_t r = 0; r < nr; ++r) {
      double acc = 0.0;
      for (std::size_t t = rays_[r].begin; t < rays_[r].end; ++t) acc += taps_[t].weight * img[taps_[t].pixel];
      sino[r] = acc;
    }
  }
  return out;
}

Tensor Projector::adjoint(const Tensor& sinogram) const {
  const std::size_t n = geom_.image_size;
  if (sinogram.rank() != 3 || sinogram.dim(1) != geom_.n_views() || sinogram.dim(2) != geom_.n_detectors) {
    throw GeometryError(fmt::format("backproject: sinogram {} does not match geometry ({} views, {} detectors)",
                                    nn::shape_string(sinogram.shape()), geom_.n_views(), geom_.n_detectors));
  }
  const std::size_t slices = sinogram.dim(0);
  const std::size_t nr = rays_.size();
  Tensor out({slices, n, n});
  for (std::size_t sl = 0; sl < slices; ++sl) {
    double* img = out.data().data() + sl * n * n;
    const double* sino = sinogram.data().data() + sl * nr;
    for (std::size_t r = 0; r < nr; ++r) {
      const double v = sino[r];
      if (v == 0.0) continue;
      for (std::size_t t = rays_[r].begin; t < rays_[r].end; ++t) img[taps_[t].pixel] += taps_[t].weight * v;
    }
  }
  return out;
}

Sinogram project(const Volume& vol, const Geometry& geom) {
  if (vol.size() != geom.image_size) {
    throw GeometryError(fmt::format("project: volume is {}x{} but geometry expects {}", vol.size(), vol.size(),
                                    geom.image_size));
  }
  return Sinogram(geom, Projector(geom).forward(vol.data));
}

Volume backproject(const Sinogram& sino) { return Volume(Projector(sino.geometry).adjoint(sino.data)); }

std::string to_string(Apodization a) { return a == Apodization::Hann ? "hann" : "ram-lak"; }

Apodization apodization_from_string(const std::string& s) {
  if (s == "ram-lak" || s == "ramlak") return Apodization::RamLak;
  if (s == "hann") return Apodization::Hann;
  throw ConfigError(fmt::format("unknown apodization '{}'", s));
}

namespace {

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Frequency response of the band-limited ramp, built from its sampled
// spatial kernel (h[0] = 1/(4d^2), h[odd] = -1/(pi n d)^2) so the DC bin
// is handled consistently with a finite detector.
std::vector<double> ramp_response(std::size_t padded, double spacing, Apodization apod) {
  std::vector<std::complex<double>> h(padded, 0.0);
  const double d2 = spacing * spacing;
  h[0] = 1.0 / (4.0 * d2);
  for (std::size_t i = 1; i <= padded / 2; ++i) {
    if (i % 2 == 1) {
      const double v = -1.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(i * i) * d2);
      h[i] = v;
      h[padded - i] = v;
    }
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, h);
  std::vector<double> resp(padded);
  for (std::size_t m = 0; m < padded; ++m) {
    double r = spec[m].real() * spacing;
    if (apod == Apodization::Hann) {
      const double f = static_cast<double>(m <= padded / 2 ? m : padded - m) / static_cast<double>(padded);
      r *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * f));
    }
    resp[m] = r;
  }
  return resp;
}

}  // namespace

Volume fbp(const Sinogram& sino, Apodization apod) {
  const auto& g = sino.geometry;
  g.validate();
  if (g.n_detectors < 2) throw GeometryError("fbp needs at least 2 detectors");
  const std::size_t nd = g.n_detectors;
  const std::size_t nv = g.n_views();
  const std::size_t n = g.image_size;
  const std::size_t slices = sino.slices();
  const std::size_t padded = next_pow2(2 * nd);
  const auto resp = ramp_response(padded, g.detector_spacing, apod);

  Eigen::FFT<double> fft;
  Tensor filtered(sino.data.shape());
  std::vector<std::complex<double>> buf(padded), spec;
  for (std::size_t row = 0; row < slices * nv; ++row) {
    const double* p = sino.data.data().data() + row * nd;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t k = 0; k < nd; ++k) buf[k] = p[k];
    fft.fwd(spec, buf);
    for (std::size_t m = 0; m < padded; ++m) spec[m] *= resp[m];
    fft.inv(buf, spec);
    double* q = filtered.data().data() + row * nd;
    for (std::size_t k = 0; k < nd; ++k) q[k] = buf[k].real();
  }

  // Pixel-driven backprojection with linear interpolation on the detector.
  Volume out(slices, n);
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  const double det_centre = (static_cast<double>(nd) - 1.0) / 2.0;
  const double scale = std::numbers::pi / static_cast<double>(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const double c = std::cos(g.angles[v]);
    const double s = std::sin(g.angles[v]);
    for (std::size_t sl = 0; sl < slices; ++sl) {
      const double* q = filtered.data().data() + (sl * nv + v) * nd;
      double* img = out.data.data().data() + sl * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = static_cast<double>(i) - centre;
        for (std::size_t j = 0; j < n; ++j) {
          const double x = static_cast<double>(j) - centre;
          const double u = (x * c + y * s) / g.detector_spacing + det_centre;
          const double u0 = std::floor(u);
          const auto k0 = static_cast<std::ptrdiff_t>(u0);
          const double frac = u - u0;
          double val = 0.0;
          if (k0 >= 0 && k0 < static_cast<std::ptrdiff_t>(nd)) val += (1.0 - frac) * q[k0];
          if (k0 + 1 >= 0 && k0 + 1 < static_cast<std::ptrdiff_t>(nd)) val += frac * q[k0 + 1];
          img[i * n + j] += scale * val;
        }
      }
    }
  }
  return out;
}

}  // namespace dinr::tomo
