#include "dinr/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dinr/errors.hpp"

namespace dinr::metrics {

namespace {
void require_same(const nn::Tensor& x, const nn::Tensor& ref) {
  if (x.shape() != ref.shape()) {
    throw ShapeError(fmt::format("metric inputs differ in shape: {} vs {}", nn::shape_string(x.shape()),
                                 nn::shape_string(ref.shape())));
  }
  if (x.empty()) throw ShapeError("metric inputs are empty");
}

void require_range(double data_range) {
  if (!(data_range > 0.0)) throw std::invalid_argument(fmt::format("data_range must be > 0, got {}", data_range));
}
}  // namespace

double psnr(const nn::Tensor& x, const nn::Tensor& ref, double data_range) {
  require_same(x, ref);
  require_range(data_range);
  double se = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    se += d * d;
  }
  if (se == 0.0) return kExactPsnr;
  const double mse = se / static_cast<double>(x.size());
  return 10.0 * std::log10(data_range * data_range / mse);
}

double psnr(const Volume& x, const Volume& ref, double data_range) { return psnr(x.data, ref.data, data_range); }

double ssim(const Volume& x, const Volume& ref, double data_range) {
  require_same(x.data, ref.data);
  require_range(data_range);
  const std::size_t S = x.slices();
  const std::size_t H = x.data.dim(1);
  const std::size_t W = x.data.dim(2);
  constexpr std::size_t k = kSsimWindow;
  if (H < k || W < k) throw ShapeError(fmt::format("SSIM window {} exceeds image {}x{}", k, H, W));

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  constexpr double n = static_cast<double>(k * k);
  constexpr double cov_norm = n / (n - 1.0);

  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const double* a = x.data.data().data() + s * H * W;
    const double* b = ref.data.data().data() + s * H * W;
    double acc = 0.0;
    for (std::size_t r = 0; r + k <= H; ++r) {
      for (std::size_t c = 0; c + k <= W; ++c) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t i = 0; i < k; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const double va = a[(r + i) * W + c + j];
            const double vb = b[(r + i) * W + c + j];
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double ma = sa / n;
        const double mb = sb / n;
        const double va = cov_norm * (saa / n - ma * ma);
        const double vb = cov_norm * (sbb / n - mb * mb);
        const double vab = cov_norm * (sab / n - ma * mb);
        acc += ((2 * ma * mb + c1) * (2 * vab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      }
    }
    total += acc / static_cast<double>((H - k + 1) * (W - k + 1));
  }
  return total / static_cast<double>(S);
}

RoiSpec RoiSpec::standard(std::size_t height, std::size_t width) {
  RoiSpec spec;
  spec.scale = std::min({1.0, static_cast<double>(height) / kAnchorHeight, static_cast<double>(width) / kAnchorWidth});
  auto scaled = [&](std::size_t v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(v) * spec.scale)));
  };
  spec.anchor.height = std::min(height, scaled(kAnchorHeight));
  spec.anchor.width = std::min(width, scaled(kAnchorWidth));
  spec.anchor.row = (height - spec.anchor.height) / 2;
  spec.anchor.col = (width - spec.anchor.width) / 2;
  for (std::size_t s : kRoiSizes) {
    spec.sizes.push_back(s);
    spec.pixels.push_back(std::min(spec.anchor.height, scaled(s)));
  }
  return spec;
}

RoiSpec RoiSpec::at(std::size_t row, std::size_t col) const {
  RoiSpec s = *this;
  s.anchor.row = row;
  s.anchor.col = col;
  return s;
}

Rect RoiSpec::crop(std::size_t i) const {
  const std::size_t p = pixels.at(i);
  return Rect{anchor.row + (anchor.height - p) / 2, anchor.col + (anchor.width - p) / 2, p, p};
}

void RoiSpec::validate(std::size_t height, std::size_t width) const {
  if (anchor.height == 0 || anchor.width == 0) throw std::invalid_argument("ROI anchor is empty");
  if (anchor.row + anchor.height > height || anchor.col + anchor.width > width) {
    throw std::out_of_range(fmt::format("ROI anchor ({}, {}, {}x{}) outside {}x{} image", anchor.row, anchor.col,
                                        anchor.height, anchor.width, height, width));
  }
  if (sizes.size() != pixels.size() || sizes.empty()) throw std::invalid_argument("ROI sizes/pixels mismatch");
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] == 0 || pixels[i] > anchor.height || pixels[i] > anchor.width) {
      throw std::invalid_argument(fmt::format("ROI crop {} does not fit its anchor", pixels[i]));
    }
    if (i > 0 && !(sizes[i] < sizes[i - 1])) throw std::invalid_argument("ROI sizes must be strictly decreasing");
  }
}

RoiSpec propose_anchor(const Volume& ref, const RoiSpec& spec, double threshold) {
  const std::size_t H = ref.data.dim(1);
  const std::size_t W = ref.data.dim(2);
  const auto ah = spec.anchor.height;
  const auto aw = spec.anchor.width;
  if (ah > H || aw > W) throw std::out_of_range("ROI anchor larger than image");
  // Integral image of the foreground mask.
  std::vector<double> integral((H + 1) * (W + 1), 0.0);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double fg = ref.data[r * W + c] > threshold ? 1.0 : 0.0;
      integral[(r + 1) * (W + 1) + c + 1] =
          fg + integral[r * (W + 1) + c + 1] + integral[(r + 1) * (W + 1) + c] - integral[r * (W + 1) + c];
    }
  }
  double best = 2.0;
  std::size_t br = 0, bc = 0;
  const double area = static_cast<double>(ah * aw);
  for (std::size_t r = 0; r + ah <= H; ++r) {
    for (std::size_t c = 0; c + aw <= W; ++c) {
      const double fg = integral[(r + ah) * (W + 1) + c + aw] - integral[r * (W + 1) + c + aw] -
                        integral[(r + ah) * (W + 1) + c] + integral[r * (W + 1) + c];
      const double score = std::abs(fg / area - 0.5);
      if (score < best) {
        best = score;
        br = r;
        bc = c;
      }
    }
  }
  return spec.at(br, bc);
}

nn::Tensor crop(const Volume& v, const Rect& r) {
  const std::size_t S = v.slices();
  const std::size_t W = v.data.dim(2);
  nn::Tensor out({S, r.height, r.width});
  std::size_t p = 0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < r.height; ++i) {
      for (std::size_t j = 0; j < r.width; ++j) out[p++] = v.data[(s * v.data.dim(1) + r.row + i) * W + r.col + j];
    }
  }
  return out;
}

std::map<std::size_t, double> roi_psnr_sweep(const Volume& x, const Volume& ref, const RoiSpec& spec,
                                             double data_range) {
  require_same(x.data, ref.data);
  spec.validate(x.data.dim(1), x.data.dim(2));
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i < spec.sizes.size(); ++i) {
    const Rect r = spec.crop(i);
    out[spec.sizes[i]] = psnr(crop(x, r), crop(ref, r), data_range);
  }
  return out;
}

MetricReport evaluate(const std::string& method, std::size_t views, const Volume& x, const Volume& ref,
                      const RoiSpec& roi, double data_range) {
  MetricReport r;
  r.method = method;
  r.views = views;
  r.psnr = psnr(x, ref, data_range);
  r.ssim = ssim(x, ref, data_range);
  r.roi_psnr = roi_psnr_sweep(x, ref, roi, data_range);
  return r;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6f}", v);
}

std::string report_csv_header() { return "method,views,psnr,ssim,roi8,roi16,roi32,roi48,roi64"; }

std::string report_csv_row(const MetricReport& r) {
  std::string row = fmt::format("{},{},{},{}", r.method, r.views, format_metric(r.psnr), format_metric(r.ssim));
  for (std::size_t s : {8, 16, 32, 48, 64}) {
    const auto it = r.roi_psnr.find(s);
    row += ",";
    if (it != r.roi_psnr.end()) row += format_metric(it->second);
  }
  return row;
}

}  // namespace dinr::metrics
