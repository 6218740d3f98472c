#pragma once

// Sequential design experiments: initial design, fit, decide, simulate,
// update, with per-seed traces, metrics and checkpoints.

#include "hetdoe/hetgp.hpp"
#include "hetdoe/lookahead.hpp"
#include "hetdoe/testbed.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hetdoe {

struct InitConfig {
  std::string design = "lhs";  // "lhs" (maximin) or "grid"
  int n = 10;
  int replicates = 1;
};

struct HorizonConfig {
  HorizonMode mode = HorizonMode::Fixed;
  int h = 0;          // fixed horizon, or the starting value under target
  double rho = 0.2;   // target ratio n/N
};

struct RefitConfig {
  int full_until_n = 50;     // refit hyperparameters every iteration while n <= this
  int every = 5;             // afterwards, every this many iterations
  int restart_every = 25;    // cold multistart cadence ...
  int restart_until_n = 50;  // ... while n < this
};

struct ExperimentConfig {
  std::string simulator = "forrester";  // forrester | synthetic | sir
  std::map<std::string, double> simulator_params;
  KernelFamily kernel = KernelFamily::Gaussian;
  KernelFamily noise_kernel = KernelFamily::Matern52;
  InitConfig init;
  long budget = 500;
  HorizonConfig horizon;
  std::string model = "hetgp";  // hetgp | homgp
  std::vector<std::uint64_t> seeds{1};
  int test_grid = 201;            // points per dimension
  int truth_replicates = 1000;    // brute-force truth when the simulator has none
  std::string truth_cache;        // optional CSV path for brute-force truth
  RefitConfig refit;
  int metrics_every = 10;
  double epsilon = 1e-6;
  int search_starts = 0;          // 0 = max(5, 2d)
  int search_iterations = 100;
  int threads = 0;                // 0 = HETDOE_THREADS or 1
  std::string output_dir;         // empty = no files
  int verbosity = 0;

  // Throws std::invalid_argument when inconsistent.
  void validate() const;
};

struct TraceRow {
  int iter = 0;
  long N = 0;
  int n = 0;
  int h = 0;
  Action action = Action::Explore;
  Vec x;
  double y = 0.0;
  double elapsed_ms = 0.0;
};

struct MetricsRow {
  int iter = 0;
  long N = 0;
  int n = 0;
  double rmse = 0.0;
  double log_noise_rmse = 0.0;
  double score = 0.0;
};

struct SeedReport {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<TraceRow> trace;
  std::vector<MetricsRow> metrics;
  UniqueDesign design;
  double elapsed_s = 0.0;
  double final_ratio() const { return design.total() ? double(design.n()) / double(design.total()) : 0.0; }
  // Percentage of unique locations holding a single observation.
  double singleton_percentage() const;
};

struct ExperimentReport {
  std::vector<SeedReport> seeds;
};

std::unique_ptr<Simulator> make_simulator(const ExperimentConfig& cfg, std::uint64_t seed);

// Test points and their true mean and noise variance. Uses the simulator's
// truth functions when present, otherwise the cache (created when missing).
TruthTable test_truth(const ExperimentConfig& cfg, const Simulator& sim, std::uint64_t seed);

// Metrics of a fitted model on a truth table.
MetricsRow evaluate_model(const HetGP& model, const TruthTable& truth);

// The initial design inputs (unit cube, with replicates as repeated rows).
Mat initial_inputs(const ExperimentConfig& cfg, int dim, std::uint64_t seed);

HetGPOptions model_options(const ExperimentConfig& cfg);

// One seed of the sequential loop. With `resume` set, continues from the
// checkpoint in output_dir when one exists.
SeedReport run_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool resume = false,
                    int stop_after_iterations = -1);

// All seeds (in parallel per the thread setting), plus summary.json.
ExperimentReport run_experiment(const ExperimentConfig& cfg, bool resume = false);

// Number of worker threads: cfg.threads, else HETDOE_THREADS, else 1.
int thread_count(const ExperimentConfig& cfg);

}  // namespace hetdoe
