#include "dinr/app/experiment.hpp"

#include <fstream>

#include <fmt/format.h>

#include "dinr/errors.hpp"
#include "dinr/rng.hpp"

namespace dinr::app {

namespace {
PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "microstructure") return PhantomKind::Microstructure;
  if (s == "shepp-logan") return PhantomKind::SheppLogan;
  if (s == "ellipses") return PhantomKind::Ellipses;
  throw ConfigError(fmt::format("phantom.kind: unknown phantom '{}' (microstructure, shepp-logan, ellipses)", s));
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
std::vector<T> list(const cfg::json& obj, std::string_view path, std::string_view key) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return {};
  const auto where = cfg::join_path(path, key);
  if (!it->is_array()) throw ConfigError(fmt::format("{}: expected a list", where));
  std::vector<T> out;
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(cfg::as<T>((*it)[i], fmt::format("{}[{}]", where, i)));
  return out;
}

void parse_phantom(const cfg::json& j, ExperimentSpec& spec) {
  const auto& p = cfg::object(j, "", "phantom");
  cfg::reject_unknown(p, "phantom",
                      {"kind", "image_size", "n_slices", "seed", "matrix_radius", "matrix_intensity", "min_gap",
                       "radius_jitter"});
  spec.phantom_kind = phantom_kind_from_string(cfg::get<std::string>(p, "phantom", "kind", "microstructure"));
  auto& c = spec.phantom;
  c.image_size = cfg::get(p, "phantom", "image_size", c.image_size);
  c.n_slices = cfg::get(p, "phantom", "n_slices", c.n_slices);
  c.seed = cfg::get(p, "phantom", "seed", spec.seed);
  c.matrix_radius = cfg::get(p, "phantom", "matrix_radius", c.matrix_radius);
  c.matrix_intensity = cfg::get(p, "phantom", "matrix_intensity", c.matrix_intensity);
  c.min_gap = cfg::get(p, "phantom", "min_gap", c.min_gap);
  c.radius_jitter = cfg::get(p, "phantom", "radius_jitter", c.radius_jitter);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("phantom: {}", e.what()));
  }
}

void parse_pretrain(const cfg::json& j, ExperimentSpec& spec) {
  const auto& p = cfg::object(j, "", "pretrain");
  cfg::reject_unknown(p, "pretrain",
                      {"samples", "image_size", "epochs", "lr", "batch_size", "train_T", "schedule", "arch"});
  auto& s = spec.pretrain;
  s.samples = cfg::get(p, "pretrain", "samples", s.samples);
  s.image_size = cfg::get(p, "pretrain", "image_size", spec.phantom.image_size);
  s.epochs = cfg::get(p, "pretrain", "epochs", s.epochs);
  s.lr = cfg::get(p, "pretrain", "lr", s.lr);
  s.batch_size = cfg::get(p, "pretrain", "batch_size", s.batch_size);
  s.train_T = cfg::get(p, "pretrain", "train_T", s.train_T);
  s.schedule = diffusion::schedule_kind_from_string(
      cfg::get<std::string>(p, "pretrain", "schedule", diffusion::to_string(s.schedule)));
  s.arch = cfg::get<std::string>(p, "pretrain", "arch", "");
  if (s.samples == 0) throw ConfigError("pretrain.samples: must be >= 1");
  if (s.batch_size == 0) throw ConfigError("pretrain.batch_size: must be >= 1");
  if (s.train_T < 2) throw ConfigError("pretrain.train_T: must be >= 2");
  if (!(s.lr > 0.0)) throw ConfigError("pretrain.lr: must be > 0");
}
}  // namespace

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::Microstructure: return "microstructure";
    case PhantomKind::SheppLogan: return "shepp-logan";
    case PhantomKind::Ellipses: return "ellipses";
  }
  return "?";
}

const solver::ReconConfig& ExperimentSpec::recon_for(solver::Method m) const {
  const auto it = per_method.find(m);
  return it == per_method.end() ? recon : it->second;
}

ExperimentSpec parse_experiment(const cfg::json& j, const fs::path& base_dir, const std::string& verb) {
  cfg::reject_unknown(j, "",
                      {"seed", "output_dir", "weights", "phantom", "geometry", "views", "methods", "recon",
                       "method_overrides", "metrics", "pretrain", "sweep"});
  ExperimentSpec spec;
  spec.source = j;
  spec.seed = cfg::get(j, "", "seed", spec.seed);
  spec.output_dir = resolve(base_dir, cfg::get<std::string>(j, "", "output_dir", "out"));
  spec.weights = resolve(base_dir, cfg::get<std::string>(j, "", "weights", ""));
  parse_phantom(j, spec);

  const auto& g = cfg::object(j, "", "geometry");
  cfg::reject_unknown(g, "geometry", {"n_detectors", "detector_spacing"});
  spec.n_detectors = cfg::get(g, "geometry", "n_detectors", spec.n_detectors);
  spec.detector_spacing = cfg::get(g, "geometry", "detector_spacing", spec.detector_spacing);
  if (!(spec.detector_spacing > 0.0)) throw ConfigError("geometry.detector_spacing: must be > 0");

  spec.views = list<std::size_t>(j, "", "views");
  for (auto v : spec.views) {
    if (v == 0) throw ConfigError("views: view counts must be >= 1");
  }
  for (const auto& m : list<std::string>(j, "", "methods")) spec.methods.push_back(solver::method_from_string(m));

  const auto& base = cfg::object(j, "", "recon");
  spec.recon = solver::recon_config_from_json(base, "recon");
  const auto& overrides = cfg::object(j, "", "method_overrides");
  for (const auto& [name, patch] : overrides.items()) {
    const auto m = solver::method_from_string(name);
    cfg::json merged = base;
    if (!patch.is_object()) throw ConfigError(fmt::format("method_overrides.{}: expected an object", name));
    merged.merge_patch(patch);
    spec.per_method[m] = solver::recon_config_from_json(merged, fmt::format("method_overrides.{}", name));
  }
  spec.recon.method = solver::Method::Fbp;
  for (auto m : {solver::Method::Fbp, solver::Method::Inr, solver::Method::Dd3ip, solver::Method::Dinr}) {
    if (!spec.per_method.contains(m)) spec.per_method[m] = spec.recon;
    spec.per_method[m].method = m;
  }

  const auto& m = cfg::object(j, "", "metrics");
  cfg::reject_unknown(m, "metrics", {"data_range", "roi_anchor"});
  spec.data_range = cfg::get(m, "metrics", "data_range", spec.data_range);
  if (!(spec.data_range > 0.0)) throw ConfigError("metrics.data_range: must be > 0");
  const auto anchor = list<std::size_t>(m, "metrics", "roi_anchor");
  if (!anchor.empty()) {
    if (anchor.size() != 2) throw ConfigError("metrics.roi_anchor: expected [row, col]");
    spec.roi_anchor = std::make_pair(anchor[0], anchor[1]);
  }

  parse_pretrain(j, spec);

  if (j.contains("sweep")) {
    const auto& s = cfg::object(j, "", "sweep");
    cfg::reject_unknown(s, "sweep", {"param", "values", "views", "method"});
    SweepSpec sw;
    sw.param = cfg::require<std::string>(s, "sweep", "param");
    if (sw.param != "omega" && sw.param != "rho_ratio") {
      throw ConfigError(fmt::format("sweep.param: expected omega or rho_ratio, got '{}'", sw.param));
    }
    sw.values = list<double>(s, "sweep", "values");
    sw.views = cfg::require<std::size_t>(s, "sweep", "views");
    sw.method = solver::method_from_string(cfg::get<std::string>(s, "sweep", "method", "dinr"));
    spec.sweep = sw;
  }

  if (verb == "reconstruct") {
    if (spec.views.empty()) throw ConfigError("views: at least one view count is required");
    if (spec.methods.empty()) throw ConfigError("methods: at least one method is required");
  }
  if (verb == "sweep") {
    if (!spec.sweep) throw ConfigError("sweep: section required for the sweep verb");
    if (spec.sweep->values.empty()) throw ConfigError("sweep.values: at least one value is required");
    if (spec.sweep->views == 0) throw ConfigError("sweep.views: must be >= 1");
  }
  if (verb == "pretrain" && spec.weights.empty()) throw ConfigError("weights: output path required for pretrain");

  bool diffusion = false;
  for (auto method : spec.methods) diffusion = diffusion || solver::uses_diffusion(method);
  if (verb == "sweep") diffusion = solver::uses_diffusion(spec.sweep->method);
  if ((verb == "reconstruct" || verb == "sweep") && diffusion) {
    if (spec.weights.empty()) throw ConfigError("weights: required for diffusion methods");
    if (!fs::exists(spec.weights)) {
      throw ConfigError(fmt::format("weights: file '{}' does not exist", spec.weights.string()));
    }
  }
  return spec;
}

ExperimentSpec load_experiment(const fs::path& path, const std::string& verb) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  cfg::json j;
  try {
    j = cfg::json::parse(in);
  } catch (const cfg::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_experiment(j, base, verb);
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t views, solver::Method m) {
  return derive_seed(derive_seed(master, views), fnv1a(solver::to_string(m)));
}

}  // namespace dinr::app
