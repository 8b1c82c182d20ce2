#pragma once

#include <filesystem>
#include <iosfwd>

#include "dinr/tomo/geometry.hpp"

namespace dinr::tomo {

// Array file: magic "DINRT001", u8 rank, u32 dims[rank], f32 payload, all
// little endian, row-major. Values are rounded to float32.
inline constexpr std::string_view kArrayMagic = "DINRT001";

void write_array(std::ostream& out, const Tensor& t);
Tensor read_array(std::istream& in);
void write_array(const std::filesystem::path& path, const Tensor& t);
Tensor read_array(const std::filesystem::path& path);

// Geometry sidecar: key=value lines (n_views, n_detectors,
// detector_spacing, image_size, angles as a comma separated list).
void write_geometry(const std::filesystem::path& path, const Geometry& g);
Geometry read_geometry(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const Volume& v);
Volume read_volume(const std::filesystem::path& path);
// Writes `path` plus `path` + ".geom".
void write_sinogram(const std::filesystem::path& path, const Sinogram& s);
Sinogram read_sinogram(const std::filesystem::path& path);

}  // namespace dinr::tomo
