#pragma once

// Stochastic simulators with known (or estimable) mean and noise surfaces.
// All simulators take inputs in the unit cube; `domain` maps them to the
// physical box affinely.

#include "hetdoe/kernel.hpp"
#include "hetdoe/sampling.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hetdoe {

struct Box {
  Vec lower;
  Vec upper;

  static Box unit(int d) { return {Vec::Zero(d), Vec::Ones(d)}; }
  int dim() const { return static_cast<int>(lower.size()); }
  Vec to_physical(const VecRef& u) const;
  Vec to_unit(const VecRef& x) const;
};

class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual Box domain() const { return Box::unit(dim()); }
  // One noisy response at unit-cube input u.
  virtual double eval(const VecRef& u, Rng& rng) const = 0;
  virtual std::optional<double> truth_mean(const VecRef&) const { return std::nullopt; }
  virtual std::optional<double> truth_noise(const VecRef&) const { return std::nullopt; }
  // Gradient of truth_noise in unit coordinates, when available.
  virtual std::optional<Vec> truth_noise_grad(const VecRef&) const { return std::nullopt; }
};

// f(x) = (6x - 2)^2 sin(12x - 4), r(x) = (1.1 + sin(2 pi x))^2.
double forrester_mean(double x);
double forrester_noise(double x);
double forrester_noise_dx(double x);
double forrester(double x, Rng& rng);

class ForresterSimulator final : public Simulator {
 public:
  std::string id() const override { return "forrester"; }
  int dim() const override { return 1; }
  double eval(const VecRef& u, Rng& rng) const override { return forrester(u[0], rng); }
  std::optional<double> truth_mean(const VecRef& u) const override { return forrester_mean(u[0]); }
  std::optional<double> truth_noise(const VecRef& u) const override { return forrester_noise(u[0]); }
  std::optional<Vec> truth_noise_grad(const VecRef& u) const override {
    return Vec::Constant(1, forrester_noise_dx(u[0]));
  }
};

struct SyntheticConfig {
  double theta = 0.1;     // Matern 5/2 lengthscale of the mean field
  double nu = 1.0;        // mean-field variance
  double theta_g = 0.5;   // Matern 5/2 lengthscale of the log-noise field
  double nu_g = 49.0;     // log-noise field variance
  int grid = 501;
};

// One draw of a mean field and a log-noise field on a 1-d grid, both zero-mean
// Matern 5/2 GPs. The noise variance is nu * Lambda(x) with log Lambda shifted
// so that Lambda averages to one over the grid (unit signal-to-noise ratio).
// Values between grid points are linearly interpolated.
class SyntheticHetGP final : public Simulator {
 public:
  SyntheticHetGP(const SyntheticConfig& config, std::uint64_t seed);

  std::string id() const override { return "synthetic"; }
  int dim() const override { return 1; }
  double eval(const VecRef& u, Rng& rng) const override;
  std::optional<double> truth_mean(const VecRef& u) const override;
  std::optional<double> truth_noise(const VecRef& u) const override;
  std::optional<Vec> truth_noise_grad(const VecRef& u) const override;

  const Vec& grid() const { return grid_; }
  const Vec& mean_values() const { return f_; }
  const Vec& lambda_values() const { return lambda_; }
  const SyntheticConfig& config() const { return config_; }

 private:
  double interpolate(const Vec& values, double u) const;

  SyntheticConfig config_;
  Vec grid_, f_, lambda_;
};

struct SirParams {
  double beta = 0.75;
  double gamma = 0.5;
  long population = 2200;
};

// Aggregate infected-days of one SIR continuous-time Markov chain started at
// (S0, I0): infections at rate beta S I / M, recoveries at rate gamma I.
double sir_simulate(long S0, long I0, const SirParams& params, Rng& rng);

struct SirTrajectoryCheck {
  bool conserved = true;
  bool nonnegative = true;
  double infected_days = 0.0;
};
// The same simulation, also checking S + I + R and signs after every event.
SirTrajectoryCheck sir_simulate_checked(long S0, long I0, const SirParams& params, Rng& rng);

// Inputs: S0 in [1200, 2000], I0 in [0, 200], rounded to integers.
class SirSimulator final : public Simulator {
 public:
  explicit SirSimulator(SirParams params = {});
  std::string id() const override { return "sir"; }
  int dim() const override { return 2; }
  Box domain() const override;
  double eval(const VecRef& u, Rng& rng) const override;
  const SirParams& params() const { return params_; }
  // Integer (S0, I0) for a unit-cube input.
  std::pair<long, long> initial_state(const VecRef& u) const;

 private:
  SirParams params_;
};

// Mean and variance of a simulator at each row of U (unit coordinates), from
// truth functions when available, otherwise by brute-force replication.
struct TruthTable {
  Mat points;
  Vec mean;
  Vec variance;
};
TruthTable estimate_truth(const Simulator& sim, const MatRef& U, int replicates, std::uint64_t seed);

// CSV with columns u_1..u_d, mean, variance; the manifest is a JSON string
// written next to it as <path>.json.
void write_truth_cache(const std::string& path, const TruthTable& table, const std::string& manifest_json);
TruthTable read_truth_cache(const std::string& path);

}  // namespace hetdoe
