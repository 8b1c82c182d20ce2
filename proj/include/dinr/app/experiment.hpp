#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dinr/diffusion/schedule.hpp"
#include "dinr/json_fields.hpp"
#include "dinr/phantom/phantom.hpp"
#include "dinr/solver/config.hpp"

namespace dinr::app {

namespace fs = std::filesystem;

enum class PhantomKind { Microstructure, SheppLogan, Ellipses };

struct PretrainSpec {
  std::size_t samples = 256;
  std::size_t image_size = 64;
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t train_T = 1000;
  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::LinearBeta;
  std::string arch;  // empty -> default architecture
};

struct SweepSpec {
  std::string param;  // omega | rho_ratio
  std::vector<double> values;
  std::size_t views = 0;
  solver::Method method = solver::Method::Dinr;
};

// Everything a CLI verb needs, read from one JSON file. Relative paths are
// resolved against the config file's directory.
struct ExperimentSpec {
  std::uint64_t seed = 0;
  fs::path output_dir = "out";
  fs::path weights;

  PhantomKind phantom_kind = PhantomKind::Microstructure;
  phantom::PhantomConfig phantom;

  std::size_t n_detectors = 0;  // 0 -> cover the image diagonal
  double detector_spacing = 1.0;

  std::vector<std::size_t> views;
  std::vector<solver::Method> methods;
  solver::ReconConfig recon;                          // shared defaults
  std::map<solver::Method, solver::ReconConfig> per_method;

  double data_range = 1.0;
  std::optional<std::pair<std::size_t, std::size_t>> roi_anchor;  // (row, col)

  PretrainSpec pretrain;
  std::optional<SweepSpec> sweep;

  cfg::json source;  // config as read, for the snapshot

  const solver::ReconConfig& recon_for(solver::Method m) const;
};

// What is required depends on the verb: "reconstruct" needs views and
// methods, "sweep" a sweep section, "pretrain" only the pretrain section.
ExperimentSpec parse_experiment(const cfg::json& j, const fs::path& base_dir, const std::string& verb);
ExperimentSpec load_experiment(const fs::path& path, const std::string& verb);

std::string to_string(PhantomKind k);

// Per-cell seed = mix(master, views) combined with the method name hash.
std::uint64_t cell_seed(std::uint64_t master, std::size_t views, solver::Method m);

}  // namespace dinr::app
