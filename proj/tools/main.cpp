// hetdoe command line: sequential design runs, figure data, truth caches.

#include "hetdoe/figures.hpp"
#include "hetdoe/harness.hpp"
#include "hetdoe/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

hetdoe::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return hetdoe::config_from_json(hetdoe::read_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential design for noisy simulators with heteroskedastic GPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::uint64_t> seeds;
  int verbosity = -1;
  bool resume = false;

  auto* run = app.add_subcommand("run", "Run a sequential design experiment");
  run->add_option("--config", config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  run->add_option("--seed", seeds, "Seed(s), overriding the config");
  run->add_option("--out", out_dir, "Output directory, overriding the config");
  run->add_option("--verbosity", verbosity, "0 = quiet, 1 = decision trace on stderr");
  run->add_flag("--resume", resume, "Continue from existing checkpoints in the output directory");

  std::string figure_id;
  hetdoe::FigureOptions fig_opts;
  auto* fig = app.add_subcommand("figure", "Emit the data behind a figure or table");
  fig->add_option("id", figure_id, "fig1 | fig2 | fig3 | fig4-ratios | table1-style")->required();
  fig->add_option("--out", out_dir, "Output directory")->required();
  fig->add_option("--seed", fig_opts.seeds, "Seeds for the experiment-based figures");
  fig->add_option("--budget", fig_opts.budget, "Budget N for the experiment-based figures");

  auto* truth = app.add_subcommand("truth-cache", "Estimate and cache the true mean and variance on the test grid");
  truth->add_option("--config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  truth->add_option("--out", out_dir, "Cache CSV path, overriding truth_cache in the config");
  truth->add_option("--verbosity", verbosity, "Verbosity");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      hetdoe::ExperimentConfig cfg = load_config(config_path);
      if (!seeds.empty()) cfg.seeds = seeds;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (verbosity >= 0) cfg.verbosity = verbosity;
      if (cfg.output_dir.empty()) cfg.output_dir = "hetdoe_out";
      cfg.validate();
      const auto report = hetdoe::run_experiment(cfg, resume);
      int failures = 0;
      for (const auto& s : report.seeds) {
        std::cout << "seed " << s.seed << ": N=" << s.design.total() << " n=" << s.design.n()
                  << " ratio=" << s.final_ratio();
        if (!s.metrics.empty()) std::cout << " rmse=" << s.metrics.back().rmse;
        if (s.failed) {
          std::cout << " FAILED: " << s.error;
          ++failures;
        }
        std::cout << '\n';
      }
      std::cout << "outputs in " << cfg.output_dir << '\n';
      return failures ? 1 : 0;
    }
    if (*fig) {
      for (const auto& f : hetdoe::replicate_figure(figure_id, out_dir, fig_opts)) std::cout << f << '\n';
      return 0;
    }
    if (*truth) {
      hetdoe::ExperimentConfig cfg = load_config(config_path);
      if (!out_dir.empty()) cfg.truth_cache = out_dir;
      if (cfg.truth_cache.empty()) throw std::invalid_argument("no truth_cache path given");
      std::filesystem::remove(cfg.truth_cache);
      const auto sim = hetdoe::make_simulator(cfg, cfg.seeds.front());
      const auto table = hetdoe::test_truth(cfg, *sim, cfg.seeds.front());
      std::cout << "wrote " << table.points.rows() << " points to " << cfg.truth_cache << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
