#include "dinr/app/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dinr/app/png.hpp"
#include "dinr/diffusion/pretrain.hpp"
#include "dinr/errors.hpp"
#include "dinr/rng.hpp"
#include "dinr/solver/solver.hpp"
#include "dinr/tomo/io.hpp"

namespace dinr::app {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
}

void write_snapshot(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  write_text(spec.output_dir / "config_snapshot.json", spec.source.dump(2) + "\n");
}

std::string cell_name(std::size_t views, solver::Method m) {
  return fmt::format("v{:03d}_{}", views, solver::to_string(m));
}

struct Cell {
  std::size_t views = 0;
  solver::Method method = solver::Method::Fbp;
};

struct CellOutcome {
  std::optional<metrics::MetricReport> report;
  std::string error;
};

solver::ReconConfig cell_config(const ExperimentSpec& spec, const Cell& c) {
  auto cfg = spec.recon_for(c.method);
  const auto seed = cell_seed(spec.seed, c.views, c.method);
  cfg.noise_seed = derive_seed(seed, 1);
  cfg.init_seed = derive_seed(seed, 2);
  return cfg;
}

metrics::MetricReport run_cell(const ExperimentSpec& spec, const Cell& c, const solver::ReconConfig& cfg,
                               const tomo::Volume& truth, const metrics::RoiSpec& roi, const fs::path& dir) {
  fs::create_directories(dir);
  const auto geom = make_geometry(spec, c.views);
  const auto sino = tomo::project(truth, geom);
  tomo::write_sinogram(dir / "sinogram.dinrt", sino);

  solver::ReconInputs in;
  in.y = &sino;
  in.truth = &truth;
  in.data_range = spec.data_range;
  const auto res = solver::reconstruct(in, cfg, spec.weights);

  tomo::write_volume(dir / "x0.dinrt", res.x0);
  write_png(dir / "x0.png", volume_image(res.x0, 0.0, spec.data_range));
  solver::write_log_csv(dir / "log.csv", res.log);
  write_text(dir / "cell.json",
             cfg::json{{"views", c.views}, {"method", solver::to_string(c.method)}, {"rho", res.rho},
                       {"recon", solver::to_json(cfg)}}
                     .dump(2) +
                 "\n");
  // score what was written (float32), so `metrics` reproduces the table exactly
  const auto stored = tomo::read_volume(dir / "x0.dinrt");
  auto report = metrics::evaluate(solver::to_string(c.method), c.views, stored, truth, roi, spec.data_range);
  write_text(dir / "metrics.csv", metrics::report_csv_header() + "\n" + metrics::report_csv_row(report) + "\n");
  spdlog::info("{}: PSNR {} dB, SSIM {} ({:.1f} s)", cell_name(c.views, c.method), metrics::format_metric(report.psnr),
               metrics::format_metric(report.ssim), res.wall_time);
  return report;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n) return;
          i = next++;
        }
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void write_roi(const fs::path& path, const metrics::RoiSpec& roi) {
  std::string text = fmt::format("scale {:.6f}\nanchor {} {} {} {}\n", roi.scale, roi.anchor.row, roi.anchor.col,
                                 roi.anchor.height, roi.anchor.width);
  for (std::size_t i = 0; i < roi.sizes.size(); ++i) {
    const auto r = roi.crop(i);
    text += fmt::format("roi{} {} {} {} {}\n", roi.sizes[i], r.row, r.col, r.height, r.width);
  }
  write_text(path, text);
}

std::string summary_text(std::vector<metrics::MetricReport> reports) {
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.views, a.method) < std::tie(b.views, b.method);
  });
  std::string text = metrics::report_csv_header() + "\n";
  for (const auto& r : reports) text += metrics::report_csv_row(r) + "\n";
  return text;
}

}  // namespace

ExperimentSpec prepare(const GlobalOptions& opt, const std::string& verb) {
  auto spec = load_experiment(opt.config, verb);
  if (opt.seed) {
    spec.seed = *opt.seed;
    spec.source["seed"] = *opt.seed;
    if (!spec.source.contains("phantom") || !spec.source["phantom"].contains("seed")) spec.phantom.seed = *opt.seed;
  }
  if (opt.out) {
    spec.output_dir = *opt.out;
    spec.source["output_dir"] = opt.out->string();
  }
  return spec;
}

tomo::Volume make_phantom(const ExperimentSpec& spec) {
  switch (spec.phantom_kind) {
    case PhantomKind::Microstructure: return phantom::microstructure_phantom(spec.phantom);
    case PhantomKind::Ellipses: return phantom::random_ellipse_image(spec.phantom, spec.phantom.seed);
    case PhantomKind::SheppLogan: return phantom::shepp_logan(spec.phantom.image_size);
  }
  throw std::logic_error("unhandled phantom kind");
}

tomo::Geometry make_geometry(const ExperimentSpec& spec, std::size_t views) {
  auto g = tomo::Geometry::uniform(views, spec.phantom.image_size, spec.n_detectors, spec.detector_spacing);
  g.validate();
  return g;
}

metrics::RoiSpec make_roi(const ExperimentSpec& spec, const tomo::Volume& truth) {
  auto roi = metrics::RoiSpec::standard(truth.size(), truth.size());
  if (spec.roi_anchor) {
    roi = roi.at(spec.roi_anchor->first, spec.roi_anchor->second);
  } else {
    double mean = 0.0;
    const std::size_t n = truth.size() * truth.size();
    for (std::size_t i = 0; i < n; ++i) mean += truth.data[i];
    roi = metrics::propose_anchor(truth, roi, mean / static_cast<double>(n));
  }
  roi.validate(truth.size(), truth.size());
  return roi;
}

int cmd_pretrain(const GlobalOptions& opt) {
  const auto spec = prepare(opt, "pretrain");
  write_snapshot(spec);
  const auto& p = spec.pretrain;
  auto pc = spec.phantom;
  pc.image_size = p.image_size;
  pc.n_slices = 1;
  const auto data_seed = derive_seed(spec.seed, fnv1a("pretrain-data"));
  const auto dataset = phantom::ellipse_dataset(pc, p.samples, data_seed);

  const auto arch = p.arch.empty() ? diffusion::DenoiserModel::default_arch() : nn::ConvSpec::parse(p.arch);
  auto model = diffusion::DenoiserModel::create(arch, diffusion::make_schedule(p.train_T, p.schedule),
                                                derive_seed(spec.seed, fnv1a("pretrain-init")));
  diffusion::PretrainOptions po;
  po.epochs = p.epochs;
  po.lr = p.lr;
  po.batch_size = p.batch_size;
  po.seed = derive_seed(spec.seed, fnv1a("pretrain-sgd"));

  std::string csv = "epoch,loss\n";
  diffusion::pretrain(model, dataset, po, [&](std::size_t epoch, double loss) {
    std::cout << fmt::format("epoch {} loss {:.6f}", epoch, loss) << std::endl;
    csv += fmt::format("{},{:.9g}\n", epoch, loss);
  });
  if (!spec.weights.parent_path().empty()) fs::create_directories(spec.weights.parent_path());
  diffusion::save_denoiser(spec.weights, model);
  write_text(spec.output_dir / "pretrain_loss.csv", csv);
  std::cout << fmt::format("weights written to {} (hash {:016x})", spec.weights.string(), model.params.hash())
            << std::endl;
  return kExitOk;
}

int cmd_reconstruct(const GlobalOptions& opt) {
  const auto spec = prepare(opt, "reconstruct");
  write_snapshot(spec);
  tomo::write_volume(spec.output_dir / "truth.dinrt", make_phantom(spec));
  // the stored (float32) truth is the reference for everything below
  const auto truth = tomo::read_volume(spec.output_dir / "truth.dinrt");
  write_png(spec.output_dir / "truth.png", volume_image(truth, 0.0, spec.data_range));
  const auto roi = make_roi(spec, truth);
  write_roi(spec.output_dir / "roi.txt", roi);

  std::vector<Cell> cells;
  for (auto v : spec.views) {
    for (auto m : spec.methods) cells.push_back({v, m});
  }
  std::vector<CellOutcome> outcomes(cells.size());
  const std::size_t threads = opt.deterministic ? 1 : opt.threads;
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto& c = cells[i];
    try {
      outcomes[i].report =
          run_cell(spec, c, cell_config(spec, c), truth, roi, spec.output_dir / "cells" / cell_name(c.views, c.method));
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
      spdlog::error("{} failed: {}", cell_name(c.views, c.method), e.what());
    }
  });

  std::vector<metrics::MetricReport> reports;
  std::string failures;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (outcomes[i].report) {
      reports.push_back(*outcomes[i].report);
    } else {
      failures += fmt::format("{}: {}\n", cell_name(cells[i].views, cells[i].method), outcomes[i].error);
    }
  }
  const auto summary = summary_text(reports);
  write_text(spec.output_dir / "summary.csv", summary);
  std::cout << summary;
  if (!failures.empty()) {
    write_text(spec.output_dir / "failures.txt", failures);
    return kExitCellFailure;
  }
  return kExitOk;
}

int cmd_sweep(const GlobalOptions& opt) {
  const auto spec = prepare(opt, "sweep");
  write_snapshot(spec);
  const auto& sw = *spec.sweep;
  const auto truth = make_phantom(spec);
  const auto roi = make_roi(spec, truth);
  const Cell cell{sw.views, sw.method};

  std::vector<std::optional<metrics::MetricReport>> rows(sw.values.size());
  bool failed = false;
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    auto cfg = cell_config(spec, cell);
    (sw.param == "omega" ? cfg.omega : cfg.rho_ratio) = sw.values[i];
    try {
      rows[i] = run_cell(spec, cell, cfg, truth, roi, spec.output_dir / "sweep" / fmt::format("value_{:02d}", i));
    } catch (const std::exception& e) {
      failed = true;
      spdlog::error("sweep {} = {} failed: {}", sw.param, sw.values[i], e.what());
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] && (!best || rows[i]->psnr > rows[*best]->psnr)) best = i;
  }
  std::string text = fmt::format("{},psnr,ssim,best\n", sw.param);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += fmt::format("{},{},{},{}\n", sw.values[i], rows[i] ? metrics::format_metric(rows[i]->psnr) : "failed",
                        rows[i] ? metrics::format_metric(rows[i]->ssim) : "failed", best == i ? "*" : "");
  }
  write_text(spec.output_dir / "sweep.csv", text);
  std::cout << text;
  if (best) std::cout << fmt::format("best {} = {}\n", sw.param, sw.values[*best]);
  return failed ? kExitCellFailure : kExitOk;
}

int cmd_metrics(const GlobalOptions& opt) {
  const auto spec = prepare(opt, "metrics");
  const auto truth = tomo::read_volume(spec.output_dir / "truth.dinrt");
  const auto roi = make_roi(spec, truth);
  std::vector<metrics::MetricReport> reports;
  const auto cells_dir = spec.output_dir / "cells";
  if (!fs::exists(cells_dir)) throw ConfigError(fmt::format("no reconstructions under '{}'", cells_dir.string()));
  for (const auto& entry : fs::directory_iterator(cells_dir)) {
    const auto meta_path = entry.path() / "cell.json";
    if (!fs::exists(meta_path) || !fs::exists(entry.path() / "x0.dinrt")) continue;
    std::ifstream in(meta_path);
    const auto meta = cfg::json::parse(in);
    const auto x0 = tomo::read_volume(entry.path() / "x0.dinrt");
    reports.push_back(metrics::evaluate(meta.at("method").get<std::string>(), meta.at("views").get<std::size_t>(), x0,
                                        truth, roi, spec.data_range));
  }
  const auto text = summary_text(reports);
  write_text(spec.output_dir / "metrics_summary.csv", text);
  std::cout << text;
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  nn::tune_allocator();
  CLI::App app{"Sparse-view CT reconstruction with diffusion-regularized implicit neural representations"};
  app.require_subcommand(1);
  GlobalOptions opt;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--config", opt.config, "experiment config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the config)");
  app.add_flag("--deterministic", opt.deterministic, "single worker, bit-reproducible outputs");
  app.add_option("--threads", opt.threads, "parallel cell workers")->check(CLI::PositiveNumber);
  app.add_subcommand("pretrain", "train the denoiser on random ellipses")->fallthrough();
  app.add_subcommand("reconstruct", "run the (views x methods) grid")->fallthrough();
  app.add_subcommand("sweep", "sweep omega or rho_ratio for one cell")->fallthrough();
  app.add_subcommand("metrics", "recompute metrics from saved reconstructions")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) opt.seed = seed;
  if (out_opt->count() > 0) opt.out = fs::path(out);

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    if (verb == "pretrain") return cmd_pretrain(opt);
    if (verb == "reconstruct") return cmd_reconstruct(opt);
    if (verb == "sweep") return cmd_sweep(opt);
    return cmd_metrics(opt);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{} failed: {}", verb, e.what());
    return kExitCellFailure;
  }
}

}  // namespace dinr::app
