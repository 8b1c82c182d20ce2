#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dinr/app/experiment.hpp"
#include "dinr/metrics/metrics.hpp"

namespace dinr::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCellFailure = 2;

struct GlobalOptions {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  bool deterministic = false;
  std::size_t threads = 1;
};

// Loads the config for `verb` and applies the --seed / --out overrides.
ExperimentSpec prepare(const GlobalOptions& opt, const std::string& verb);

tomo::Volume make_phantom(const ExperimentSpec& spec);
tomo::Geometry make_geometry(const ExperimentSpec& spec, std::size_t views);
metrics::RoiSpec make_roi(const ExperimentSpec& spec, const tomo::Volume& truth);

int cmd_pretrain(const GlobalOptions& opt);
int cmd_reconstruct(const GlobalOptions& opt);
int cmd_sweep(const GlobalOptions& opt);
int cmd_metrics(const GlobalOptions& opt);

// Parses argv, runs the verb and maps errors to exit codes.
int run_cli(int argc, char** argv);

}  // namespace dinr::app
