#include "dinr/tomo/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dinr/binary_io.hpp"
#include "dinr/errors.hpp"

namespace dinr::tomo {

void write_array(std::ostream& out, const Tensor& t) {
  binio::write_bytes(out, kArrayMagic);
  binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) binio::write_le<float>(out, static_cast<float>(v));
  if (!out) throw FormatError("failed writing array");
}

Tensor read_array(std::istream& in) {
  binio::expect_magic(in, kArrayMagic);
  const auto rank = binio::read_le<std::uint8_t>(in);
  nn::Shape shape(rank);
  for (auto& d : shape) d = binio::read_le<std::uint32_t>(in);
  Tensor t(shape);
  for (double& v : t.storage()) v = binio::read_le<float>(in);
  return t;
}

void write_array(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path.string()));
  write_array(out, t);
}

Tensor read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  return read_array(in);
}

void write_geometry(const std::filesystem::path& path, const Geometry& g) {
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path.string()));
  out << "n_views=" << g.n_views() << "\n";
  out << "n_detectors=" << g.n_detectors << "\n";
  out << fmt::format("detector_spacing={:.17g}\n", g.detector_spacing);
  out << "image_size=" << g.image_size << "\n";
  out << "angles=";
  for (std::size_t i = 0; i < g.angles.size(); ++i) out << (i ? "," : "") << fmt::format("{:.17g}", g.angles[i]);
  out << "\n";
}

namespace {

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(fmt::format("geometry: bad number '{}' for {}", s, key));
  }
}

std::size_t parse_count(const std::string& s, const std::string& key) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(fmt::format("geometry: bad count '{}' for {}", s, key));
  }
  return v;
}

}  // namespace

Geometry read_geometry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(fmt::format("{}:{}: expected key=value", path.string(), lineno));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(fmt::format("{}: missing key '{}'", path.string(), key));
    return it->second;
  };
  Geometry g;
  g.n_detectors = parse_count(need("n_detectors"), "n_detectors");
  g.image_size = parse_count(need("image_size"), "image_size");
  if (kv.contains("detector_spacing")) g.detector_spacing = parse_double(kv["detector_spacing"], "detector_spacing");
  std::stringstream ss(need("angles"));
  std::string tok;
  while (std::getline(ss, tok, ',')) g.angles.push_back(parse_double(tok, "angles"));
  if (g.angles.size() != parse_count(need("n_views"), "n_views")) {
    throw FormatError(fmt::format("{}: n_views does not match the angle list", path.string()));
  }
  g.validate();
  return g;
}

void write_volume(const std::filesystem::path& path, const Volume& v) { write_array(path, v.data); }

Volume read_volume(const std::filesystem::path& path) { return Volume(read_array(path)); }

void write_sinogram(const std::filesystem::path& path, const Sinogram& s) {
  write_array(path, s.data);
  write_geometry(path.string() + ".geom", s.geometry);
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  return Sinogram(read_geometry(path.string() + ".geom"), read_array(path));
}

}  // namespace dinr::tomo
