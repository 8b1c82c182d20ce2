#include "dinr/phantom/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "dinr/errors.hpp"
#include "dinr/rng.hpp"
#include "dinr/tomo/io.hpp"

namespace dinr::phantom {

void EllipseSpec::validate() const {
  if (!(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0)) {
    throw ConfigError(fmt::format("ellipse semi-axes must lie in (0, 1], got ({}, {})", a, b));
  }
  if (std::abs(cx) > 1.0 + std::max(a, b) || std::abs(cy) > 1.0 + std::max(a, b)) {
    throw ConfigError("ellipse does not intersect the unit square");
  }
}

void PhantomConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(fmt::format("phantom config: {}", what));
  };
  check(image_size >= 4, "image_size must be >= 4");
  check(n_slices >= 1, "n_slices must be >= 1");
  check(ellipse_count.lo >= 0 && ellipse_count.lo <= ellipse_count.hi, "ellipse_count range is empty");
  check(ellipse_intensity.lo <= ellipse_intensity.hi, "ellipse_intensity range is empty");
  check(ellipse_axis.lo > 0.0 && ellipse_axis.lo <= ellipse_axis.hi && ellipse_axis.hi <= 1.0,
        "ellipse_axis must be a non-empty range inside (0, 1]");
  check(matrix_radius > 0.0 && matrix_radius < 1.0, "matrix_radius must lie in (0, 1)");
  check(aggregate_count.lo >= 0 && aggregate_count.lo <= aggregate_count.hi, "aggregate_count range is empty");
  check(aggregate_radius.lo > 0.0 && aggregate_radius.lo <= aggregate_radius.hi, "aggregate_radius range is empty");
  check(aggregate_intensity.lo <= aggregate_intensity.hi, "aggregate_intensity range is empty");
  check(pore_count.lo >= 0 && pore_count.lo <= pore_count.hi, "pore_count range is empty");
  check(pore_radius.lo > 0.0 && pore_radius.lo <= pore_radius.hi, "pore_radius range is empty");
  check(radius_jitter >= 0.0 && radius_jitter < 1.0, "radius_jitter must lie in [0, 1)");
  check(retry_budget >= 1, "retry_budget must be >= 1");
}

namespace {

double pixel_coord(std::size_t idx, std::size_t n) {
  const auto nd = static_cast<double>(n);
  return (static_cast<double>(idx) - (nd - 1.0) / 2.0) / (nd / 2.0);
}

bool inside_fov(double u, double v) { return u * u + v * v <= 1.0; }

}  // namespace

Tensor render_ellipses(std::size_t size, const std::vector<EllipseSpec>& ellipses) {
  Tensor img({size, size});
  for (const auto& e : ellipses) {
    e.validate();
    const double c = std::cos(e.rotation);
    const double s = std::sin(e.rotation);
    for (std::size_t i = 0; i < size; ++i) {
      const double dv = pixel_coord(i, size) - e.cy;
      for (std::size_t j = 0; j < size; ++j) {
        const double du = pixel_coord(j, size) - e.cx;
        const double xr = du * c + dv * s;
        const double yr = -du * s + dv * c;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) img[i * size + j] += e.intensity;
      }
    }
  }
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      double& v = img[i * size + j];
      v = inside_fov(pixel_coord(j, size), pixel_coord(i, size)) ? std::clamp(v, 0.0, 1.0) : 0.0;
    }
  }
  return img;
}

std::vector<EllipseSpec> random_ellipses(const PhantomConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto k = rng.uniform_int(cfg.ellipse_count.lo, cfg.ellipse_count.hi);
  std::vector<EllipseSpec> out;
  out.reserve(static_cast<std::size_t>(k));
  const double ext = cfg.ellipse_center_extent;
  for (std::int64_t i = 0; i < k; ++i) {
    EllipseSpec e;
    e.cx = rng.uniform(-ext, ext);
    e.cy = rng.uniform(-ext, ext);
    e.a = rng.uniform(cfg.ellipse_axis.lo, cfg.ellipse_axis.hi);
    e.b = rng.uniform(cfg.ellipse_axis.lo, cfg.ellipse_axis.hi);
    e.rotation = rng.uniform(0.0, std::numbers::pi);
    e.intensity = rng.uniform(cfg.ellipse_intensity.lo, cfg.ellipse_intensity.hi);
    out.push_back(e);
  }
  return out;
}

Volume random_ellipse_image(const PhantomConfig& cfg, std::uint64_t seed) {
  const std::size_t n = cfg.image_size;
  return Volume(render_ellipses(n, random_ellipses(cfg, seed)).reshaped({1, n, n}));
}

namespace {

bool clear_of(const Disc& d, const std::vector<Disc>& others, double gap) {
  for (const auto& o : others) {
    if (std::hypot(d.cx - o.cx, d.cy - o.cy) < d.r + o.r + gap) return false;
  }
  return true;
}

// Places a disc of radius r inside the matrix, away from `taken`.
Disc place_disc(Rng& rng, const PhantomConfig& cfg, double r, double intensity, const std::vector<Disc>& taken,
                const char* what) {
  const double reach = cfg.matrix_radius - r - cfg.min_gap;
  if (reach <= 0.0) throw Error(fmt::format("{} radius {} does not fit inside the matrix disc", what, r));
  for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
    // Uniform in the disc of radius `reach`.
    const double rho = reach * std::sqrt(rng.uniform(0.0, 1.0));
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Disc d{rho * std::cos(phi), rho * std::sin(phi), r, intensity};
    if (clear_of(d, taken, cfg.min_gap)) return d;
  }
  throw Error(fmt::format("could not place {} within {} attempts; phantom config is overcrowded", what,
                          cfg.retry_budget));
}

}  // namespace

MicrostructureLayout microstructure_layout(const PhantomConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  MicrostructureLayout layout;
  layout.matrix = Disc{0.0, 0.0, cfg.matrix_radius, cfg.matrix_intensity};

  std::vector<Disc> base;
  const auto n_agg = rng.uniform_int(cfg.aggregate_count.lo, cfg.aggregate_count.hi);
  for (std::int64_t i = 0; i < n_agg; ++i) {
    const double r = rng.uniform(cfg.aggregate_radius.lo, cfg.aggregate_radius.hi);
    const double inten = rng.uniform(cfg.aggregate_intensity.lo, cfg.aggregate_intensity.hi);
    base.push_back(place_disc(rng, cfg, r, inten, base, "aggregate"));
  }

  for (std::size_t sl = 0; sl < cfg.n_slices; ++sl) {
    std::vector<Disc> aggs = base;
    if (sl > 0) {
      // Shrinking only keeps the shared centres non-overlapping.
      for (auto& d : aggs) d.r *= 1.0 - rng.uniform(0.0, cfg.radius_jitter);
    }
    std::vector<Disc> taken = aggs;
    std::vector<Disc> pores;
    const auto n_pores = rng.uniform_int(cfg.pore_count.lo, cfg.pore_count.hi);
    for (std::int64_t i = 0; i < n_pores; ++i) {
      const double r = rng.uniform(cfg.pore_radius.lo, cfg.pore_radius.hi);
      Disc p = place_disc(rng, cfg, r, 0.0, taken, "pore");
      taken.push_back(p);
      pores.push_back(p);
    }
    layout.aggregates.push_back(std::move(aggs));
    layout.pores.push_back(std::move(pores));
  }
  return layout;
}

Volume render_microstructure(std::size_t size, const MicrostructureLayout& layout) {
  const std::size_t slices = layout.aggregates.size();
  Volume vol(slices, size);
  auto inside = [](const Disc& d, double u, double v) {
    const double du = u - d.cx, dv = v - d.cy;
    return du * du + dv * dv <= d.r * d.r;
  };
  for (std::size_t sl = 0; sl < slices; ++sl) {
    for (std::size_t i = 0; i < size; ++i) {
      const double v = pixel_coord(i, size);
      for (std::size_t j = 0; j < size; ++j) {
        const double u = pixel_coord(j, size);
        double val = 0.0;
        if (inside_fov(u, v) && inside(layout.matrix, u, v)) {
          val = layout.matrix.intensity;
          for (const auto& d : layout.aggregates[sl]) {
            if (inside(d, u, v)) val = d.intensity;
          }
          for (const auto& d : layout.pores[sl]) {
            if (inside(d, u, v)) val = d.intensity;
          }
        }
        vol.data[(sl * size + i) * size + j] = val;
      }
    }
  }
  return vol;
}

Volume microstructure_phantom(const PhantomConfig& cfg) {
  return render_microstructure(cfg.image_size, microstructure_layout(cfg));
}

std::vector<Volume> ellipse_dataset(const PhantomConfig& cfg, std::size_t n, std::uint64_t base_seed) {
  std::vector<Volume> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Volume v = random_ellipse_image(cfg, base_seed + i);
    for (double& x : v.data.storage()) x = 2.0 * x - 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

Volume shepp_logan(std::size_t size) {
  // intensity, a, b, x0, y0, phi (degrees)
  static constexpr double kTable[10][6] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},         {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},     {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0}};
  std::vector<EllipseSpec> es;
  for (const auto& row : kTable) {
    es.push_back({row[3], -row[4], row[1], row[2], -row[5] * std::numbers::pi / 180.0, row[0]});
  }
  return Volume(render_ellipses(size, es).reshaped({1, size, size}));
}

void write_dataset(const std::filesystem::path& dir, const std::vector<Volume>& samples, std::uint64_t base_seed) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError(fmt::format("cannot write manifest in '{}'", dir.string()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto name = fmt::format("sample_{:05d}.dinrt", i);
    tomo::write_volume(dir / name, samples[i]);
    manifest << i << " " << base_seed + i << " " << name << "\n";
  }
}

}  // namespace dinr::phantom
