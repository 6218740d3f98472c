#include "hetdoe/testbed.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace hetdoe {

Vec Box::to_physical(const VecRef& u) const {
  Vec x(u.size());
  for (Eigen::Index p = 0; p < u.size(); ++p) {
    if (u[p] == 0.0) x[p] = lower[p];
    else if (u[p] == 1.0) x[p] = upper[p];
    else x[p] = lower[p] + u[p] * (upper[p] - lower[p]);
  }
  return x;
}

Vec Box::to_unit(const VecRef& x) const {
  Vec u(x.size());
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    if (x[p] == lower[p]) u[p] = 0.0;
    else if (x[p] == upper[p]) u[p] = 1.0;
    else u[p] = (x[p] - lower[p]) / (upper[p] - lower[p]);
  }
  return u;
}

double forrester_mean(double x) {
  const double a = 6.0 * x - 2.0;
  return a * a * std::sin(12.0 * x - 4.0);
}

double forrester_noise(double x) {
  const double b = 1.1 + std::sin(2.0 * std::numbers::pi * x);
  return b * b;
}

double forrester_noise_dx(double x) {
  const double b = 1.1 + std::sin(2.0 * std::numbers::pi * x);
  return 2.0 * b * 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * x);
}

double forrester(double x, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return forrester_mean(x) + std::sqrt(forrester_noise(x)) * z(rng);
}

namespace {

// Lower Cholesky factors of Matern 5/2 correlation matrices on unit grids,
// shared across draws with the same (lengthscale, grid size).
const Mat& grid_factor(double theta, int grid) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, Mat> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({theta, grid});
  if (it != cache.end()) return it->second;
  const KernelSpec spec = KernelSpec::isotropic(KernelFamily::Matern52, 1, theta);
  Mat C = correlation_matrix(spec, unit_grid(grid));
  C.diagonal().array() += 1e-8;
  Eigen::LLT<Mat> llt(C);
  if (llt.info() != Eigen::Success) throw std::runtime_error("SyntheticHetGP: grid correlation not factorizable");
  return cache.emplace(std::make_pair(theta, grid), llt.matrixL().toDenseMatrix()).first->second;
}

}  // namespace

SyntheticHetGP::SyntheticHetGP(const SyntheticConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.grid < 2) throw std::invalid_argument("SyntheticHetGP: grid needs at least two points");
  if (!(config_.theta > 0 && config_.nu > 0 && config_.theta_g > 0 && config_.nu_g > 0))
    throw std::invalid_argument("SyntheticHetGP: parameters must be positive");
  grid_ = unit_grid(config_.grid);
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Vec e1(config_.grid), e2(config_.grid);
  for (int i = 0; i < config_.grid; ++i) e1[i] = z(rng);
  for (int i = 0; i < config_.grid; ++i) e2[i] = z(rng);
  f_ = std::sqrt(config_.nu) * (grid_factor(config_.theta, config_.grid) * e1);
  Vec log_lambda = std::sqrt(config_.nu_g) * (grid_factor(config_.theta_g, config_.grid) * e2);
  // Shift so that the mean of Lambda over the grid is one (computed stably).
  const double m = log_lambda.maxCoeff();
  const double log_mean = m + std::log((log_lambda.array() - m).exp().mean());
  lambda_ = (log_lambda.array() - log_mean).exp().matrix();
}

double SyntheticHetGP::interpolate(const Vec& values, double u) const {
  const double pos = std::clamp(u, 0.0, 1.0) * (config_.grid - 1);
  const int i = std::min(static_cast<int>(pos), config_.grid - 2);
  const double t = pos - i;
  return (1.0 - t) * values[i] + t * values[i + 1];
}

double SyntheticHetGP::eval(const VecRef& u, Rng& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  return *truth_mean(u) + std::sqrt(*truth_noise(u)) * z(rng);
}

std::optional<double> SyntheticHetGP::truth_mean(const VecRef& u) const { return interpolate(f_, u[0]); }

std::optional<double> SyntheticHetGP::truth_noise(const VecRef& u) const {
  return config_.nu * interpolate(lambda_, u[0]);
}

std::optional<Vec> SyntheticHetGP::truth_noise_grad(const VecRef& u) const {
  const double pos = std::clamp(u[0], 0.0, 1.0) * (config_.grid - 1);
  const int i = std::min(static_cast<int>(pos), config_.grid - 2);
  return Vec::Constant(1, config_.nu * (lambda_[i + 1] - lambda_[i]) * (config_.grid - 1));
}

namespace {

template <bool Check>
SirTrajectoryCheck sir_run(long S0, long I0, const SirParams& params, Rng& rng) {
  if (S0 < 0 || I0 < 0) throw std::invalid_argument("sir_simulate: negative initial state");
  if (S0 + I0 > params.population) throw std::invalid_argument("sir_simulate: S0 + I0 exceeds the population");
  if (!(params.beta >= 0.0 && params.gamma > 0.0)) throw std::invalid_argument("sir_simulate: invalid rates");
  SirTrajectoryCheck out;
  long S = S0, I = I0, R = params.population - S0 - I0;
  const long total = params.population;
  const double M = static_cast<double>(params.population);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double area = 0.0;
  while (I > 0) {
    const double infect = params.beta * static_cast<double>(S) * static_cast<double>(I) / M;
    const double recover = params.gamma * static_cast<double>(I);
    const double rate = infect + recover;
    const double dt = -std::log1p(-unif(rng)) / rate;
    area += static_cast<double>(I) * dt;
    if (unif(rng) * rate < infect) {
      --S;
      ++I;
    } else {
      --I;
      ++R;
    }
    if constexpr (Check) {
      if (S + I + R != total) out.conserved = false;
      if (S < 0 || I < 0 || R < 0) out.nonnegative = false;
    }
  }
  out.infected_days = area;
  return out;
}

}  // namespace

double sir_simulate(long S0, long I0, const SirParams& params, Rng& rng) {
  return sir_run<false>(S0, I0, params, rng).infected_days;
}

SirTrajectoryCheck sir_simulate_checked(long S0, long I0, const SirParams& params, Rng& rng) {
  return sir_run<true>(S0, I0, params, rng);
}

SirSimulator::SirSimulator(SirParams params) : params_(params) {}

Box SirSimulator::domain() const {
  Box b;
  b.lower = Eigen::Vector2d(1200.0, 0.0);
  b.upper = Eigen::Vector2d(2000.0, 200.0);
  return b;
}

std::pair<long, long> SirSimulator::initial_state(const VecRef& u) const {
  const Vec x = domain().to_physical(u.cwiseMax(0.0).cwiseMin(1.0));
  return {std::lround(x[0]), std::lround(x[1])};
}

double SirSimulator::eval(const VecRef& u, Rng& rng) const {
  const auto [S0, I0] = initial_state(u);
  return sir_simulate(S0, I0, params_, rng);
}

TruthTable estimate_truth(const Simulator& sim, const MatRef& U, int replicates, std::uint64_t seed) {
  TruthTable t;
  t.points = U;
  t.mean.resize(U.rows());
  t.variance.resize(U.rows());
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const Vec u = U.row(i).transpose();
    const auto m = sim.truth_mean(u);
    const auto v = sim.truth_noise(u);
    if (m && v) {
      t.mean[i] = *m;
      t.variance[i] = *v;
      continue;
    }
    if (replicates < 2) throw std::invalid_argument("estimate_truth: need at least two replicates");
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    double mean = 0.0, m2 = 0.0;
    for (int j = 0; j < replicates; ++j) {
      const double y = sim.eval(u, rng);
      const double delta = y - mean;
      mean += delta / (j + 1);
      m2 += delta * (y - mean);
    }
    t.mean[i] = mean;
    t.variance[i] = m2 / (replicates - 1);
  }
  return t;
}

void write_truth_cache(const std::string& path, const TruthTable& table, const std::string& manifest_json) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_truth_cache: cannot open " + path);
  out.precision(17);
  const Eigen::Index d = table.points.cols();
  for (Eigen::Index p = 0; p < d; ++p) out << "u" << (p + 1) << ',';
  out << "mean,variance\n";
  for (Eigen::Index i = 0; i < table.points.rows(); ++i) {
    for (Eigen::Index p = 0; p < d; ++p) out << table.points(i, p) << ',';
    out << table.mean[i] << ',' << table.variance[i] << '\n';
  }
  std::ofstream man(path + ".json");
  if (!man) throw std::runtime_error("write_truth_cache: cannot open manifest for " + path);
  man << manifest_json << '\n';
}

TruthTable read_truth_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_truth_cache: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const long columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 3) throw std::runtime_error("read_truth_cache: malformed header in " + path);
  const long d = columns - 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<long>(row.size()) != columns) throw std::runtime_error("read_truth_cache: ragged row in " + path);
    rows.push_back(std::move(row));
  }
  TruthTable t;
  t.points.resize(rows.size(), d);
  t.mean.resize(rows.size());
  t.variance.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (long p = 0; p < d; ++p) t.points(i, p) = rows[i][p];
    t.mean[i] = rows[i][d];
    t.variance[i] = rows[i][d + 1];
  }
  return t;
}

}  // namespace hetdoe
