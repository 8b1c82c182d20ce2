#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dinr/tomo/geometry.hpp"

namespace dinr::app {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// round(255 * clamp((v - lo) / (hi - lo), 0, 1))
std::uint8_t quantize(double v, double lo, double hi);

// Slices laid out left to right in one 8-bit image.
GrayImage volume_image(const tomo::Volume& v, double lo, double hi);

void write_png(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_png(const std::filesystem::path& path);

}  // namespace dinr::app
