#include "dinr/app/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <png.h>

#include "dinr/errors.hpp"

namespace dinr::app {

std::uint8_t quantize(double v, double lo, double hi) {
  const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * u));
}

GrayImage volume_image(const tomo::Volume& v, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("PNG export range must satisfy hi > lo");
  const std::size_t S = v.slices();
  const std::size_t N = v.size();
  GrayImage img;
  img.width = S * N;
  img.height = N;
  img.pixels.resize(img.width * img.height);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < N; ++c) {
        img.pixels[r * img.width + s * N + c] = quantize(v.data[(s * N + r) * N + c], lo, hi);
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr) == 0) {
    throw FormatError(fmt::format("writing PNG '{}' failed: {}", path.string(), png.message));
  }
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw FormatError(fmt::format("reading PNG '{}' failed: {}", path.string(), png.message));
  }
  png.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.width = png.width;
  img.height = png.height;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr) == 0) {
    png_image_free(&png);
    throw FormatError(fmt::format("decoding PNG '{}' failed: {}", path.string(), png.message));
  }
  return img;
}

}  // namespace dinr::app
