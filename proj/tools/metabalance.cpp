// metabalance: prepare datasets, run experiments and strategy grids, export curves.
//
// Exit codes: 0 success, 1 partial failure (some seeds or grid cells
// failed), 2 configuration or input error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "metabalance/errors.hpp"
#include "metabalance/experiment/config.hpp"
#include "metabalance/experiment/runner.hpp"

namespace fs = std::filesystem;
using namespace metabalance;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

struct Source {
  std::string config_file;
  std::string preset;
  std::vector<std::uint64_t> seeds;
  unsigned threads = 0;
  std::string out;
  std::string data_dir;
  bool first_order = false;

  void add_to(CLI::App* cmd, bool training) {
    auto* cfg = cmd->add_option("-c,--config", config_file, "JSON experiment config");
    auto* pre = cmd->add_option("-p,--preset", preset, "built-in preset name (see `presets`)");
    cfg->excludes(pre);
    cmd->add_option("-o,--out", out, "output directory (overrides the config)");
    cmd->add_option("--data-dir", data_dir, "directory relative dataset paths resolve against");
    if (training) {
      cmd->add_option("-s,--seeds", seeds, "seed list, e.g. --seeds 0 1 2")->delimiter(',');
      cmd->add_option("-j,--threads", threads, "seeds / grid cells run concurrently");
      cmd->add_flag("--first-order", first_order, "first-order meta-gradient (theta' detached)");
    }
  }

  experiment::ExperimentConfig resolve() const {
    if (config_file.empty() && preset.empty()) throw ConfigError("give --config FILE or --preset NAME");
    if (!data_dir.empty()) setenv("METABALANCE_DATA_DIR", data_dir.c_str(), 1);
    auto c = config_file.empty() ? experiment::preset(preset) : experiment::load_config(config_file);
    if (!seeds.empty()) c.seeds = seeds;
    if (threads > 0) c.threads = threads;
    if (!out.empty()) c.output_dir = out;
    if (first_order) c.metabalance.first_order = true;
    c.validate();
    return c;
  }
};

int cmd_prepare(const Source& src) {
  const auto c = src.resolve();
  const auto data = experiment::prepare_data(c.dataset);
  const fs::path dir = fs::path(c.output_dir) / "data";
  for (const auto& p : experiment::write_prepared(data, dir)) std::cout << p.string() << '\n';
  std::cout << "train rows " << data.train.size() << ", test rows " << data.test.size() << ", split checksum "
            << (data.manifest.split_checksum.empty() ? "n/a" : data.manifest.split_checksum) << '\n';
  for (const auto& [cls, n] : data.manifest.class_counts) std::cout << "class " << cls << ": " << n << '\n';
  return kOk;
}

int cmd_run(const Source& src) {
  const auto c = src.resolve();
  const auto data = experiment::prepare_data(c.dataset);
  const auto m = experiment::run_experiment(c, data, c.output_dir);
  for (const auto& s : m.seeds) {
    if (s.ok())
      std::cout << "seed " << s.seed << ": " << m.headline_name << " " << s.headline << '\n';
    else
      std::cout << "seed " << s.seed << ": FAILED " << s.error << '\n';
  }
  std::cout << m.headline_name << " mean " << m.mean << " std err ";
  if (std::isfinite(m.std_err))
    std::cout << m.std_err;
  else
    std::cout << "N/A";
  std::cout << " (" << m.seeds.size() - m.failures() << "/" << m.seeds.size() << " seeds)\n"
            << "manifest " << (fs::path(c.output_dir) / "manifest.json").string() << '\n';
  return m.failures() == 0 ? kOk : kPartial;
}

int cmd_grid(const Source& src) {
  const auto c = src.resolve();
  const auto data = experiment::prepare_data(c.dataset);
  const auto g = experiment::run_grid(c, data, c.output_dir);
  std::size_t failures = 0;
  for (const auto& row : g.cells)
    for (const auto& cell : row) failures += cell.failures.size();
  const auto [r, col] = g.argmax();
  std::cout << "grid " << g.inner.size() << "x" << g.outer.size() << " written to "
            << (fs::path(c.output_dir) / "grid.csv").string() << "\nbest cell: inner "
            << resample::to_string(g.inner[r]) << ", outer " << resample::to_string(g.outer[col]) << " ("
            << g.cells[r][col].mean << ")\n";
  if (failures > 0) std::cout << failures << " cell runs failed; see grid.json\n";
  return failures == 0 ? kOk : kPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MetaBalance training and evaluation on class-imbalanced data"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  Source prepare_src, run_src, grid_src, show_src;
  auto* prepare = app.add_subcommand("prepare", "load, split and normalize a dataset; write the split and manifest");
  prepare_src.add_to(prepare, false);
  auto* run = app.add_subcommand("run", "train every seed of an experiment and write metrics + manifest");
  run_src.add_to(run, true);
  auto* grid = app.add_subcommand("grid", "inner x outer sampler grid of MetaBalance runs");
  grid_src.add_to(grid, true);
  std::string run_dir;
  auto* curves = app.add_subcommand("curves", "per-class train/test accuracy curves from a run directory");
  curves->add_option("run_dir", run_dir, "directory written by `run`")->required();
  auto* presets = app.add_subcommand("presets", "list built-in presets");
  auto* show = app.add_subcommand("show-config", "print the fully resolved configuration");
  show_src.add_to(show, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*prepare) return cmd_prepare(prepare_src);
    if (*run) return cmd_run(run_src);
    if (*grid) return cmd_grid(grid_src);
    if (*curves) {
      for (const auto& p : experiment::write_curves(run_dir)) std::cout << p.string() << '\n';
      return kOk;
    }
    if (*presets) {
      for (const auto& n : experiment::preset_names()) std::cout << n << '\n';
      return kOk;
    }
    if (*show) {
      std::cout << experiment::to_json(show_src.resolve());
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kOk;
}
