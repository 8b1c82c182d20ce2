#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dinr/tomo/geometry.hpp"

namespace dinr::metrics {

using tomo::Volume;

// PSNR of an exact match.
inline constexpr double kExactPsnr = std::numeric_limits<double>::infinity();
inline bool is_exact(double psnr) { return psnr == kExactPsnr; }

double psnr(const Volume& x, const Volume& ref, double data_range);
// Same on raw (..., H, W) tensors.
double psnr(const nn::Tensor& x, const nn::Tensor& ref, double data_range);

inline constexpr std::size_t kSsimWindow = 7;
// Mean local SSIM with a 7x7 uniform window over valid positions, sample
// (N-1) covariances, K1 = 0.01, K2 = 0.03; averaged over slices.
double ssim(const Volume& x, const Volume& ref, double data_range);

struct Rect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline constexpr std::size_t kAnchorHeight = 64;
inline constexpr std::size_t kAnchorWidth = 96;
inline constexpr std::array<std::size_t, 5> kRoiSizes{64, 48, 32, 16, 8};

// Nested square crops centred inside an anchor rectangle. `sizes` are the
// nominal sizes (used as report keys); `pixels` the actual edge lengths
// after scaling to the image.
struct RoiSpec {
  Rect anchor;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> pixels;
  double scale = 1.0;

  // Nominal 64x96 anchor and {64,...,8} crops, shrunk by
  // min(1, H/64, W/96) for smaller images; the anchor is centred unless
  // placed explicitly via `at`.
  static RoiSpec standard(std::size_t height, std::size_t width);
  RoiSpec at(std::size_t row, std::size_t col) const;

  Rect crop(std::size_t i) const;
  void validate(std::size_t height, std::size_t width) const;
};

// Anchor position (same size as spec.anchor) whose foreground fraction
// (pixels above `threshold` in the first slice) is closest to one half.
RoiSpec propose_anchor(const Volume& ref, const RoiSpec& spec, double threshold);

// nominal size -> dB (kExactPsnr for exact crops).
std::map<std::size_t, double> roi_psnr_sweep(const Volume& x, const Volume& ref, const RoiSpec& spec,
                                             double data_range);

// Crop (all slices) of a volume; no bounds clamping.
nn::Tensor crop(const Volume& v, const Rect& r);

struct MetricReport {
  std::string method;
  std::size_t views = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::map<std::size_t, double> roi_psnr;
};

MetricReport evaluate(const std::string& method, std::size_t views, const Volume& x, const Volume& ref,
                      const RoiSpec& roi, double data_range);

// "method,views,psnr,ssim,roi8,roi16,roi32,roi48,roi64"
std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);
// Fixed-precision number formatting shared by every CSV writer; "inf" for
// exact matches.
std::string format_metric(double v);

}  // namespace dinr::metrics
