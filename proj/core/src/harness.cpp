#include "hetdoe/harness.hpp"

#include "hetdoe/metrics.hpp"
#include "hetdoe/serialize.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hetdoe {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (simulator != "forrester" && simulator != "synthetic" && simulator != "sir")
    throw std::invalid_argument("config: unknown simulator '" + simulator + "'");
  if (init.design != "lhs" && init.design != "grid") throw std::invalid_argument("config: init.design must be lhs or grid");
  if (init.n < 1 || init.replicates < 1) throw std::invalid_argument("config: init.n and init.replicates must be >= 1");
  if (budget < static_cast<long>(init.n) * init.replicates)
    throw std::invalid_argument("config: budget is smaller than the initial design");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (model != "hetgp" && model != "homgp") throw std::invalid_argument("config: model must be hetgp or homgp");
  if (horizon.h < -1) throw std::invalid_argument("config: horizon.h must be >= -1");
  if (horizon.mode == HorizonMode::Target && !(horizon.rho > 0.0 && horizon.rho < 1.0))
    throw std::invalid_argument("config: horizon.rho must lie in (0, 1)");
  if (test_grid < 2) throw std::invalid_argument("config: test_grid must be >= 2");
  if (metrics_every < 1 || refit.every < 1 || refit.restart_every < 1)
    throw std::invalid_argument("config: cadences must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("config: epsilon must be non-negative");
}

double SeedReport::singleton_percentage() const {
  if (design.n() == 0) return 0.0;
  return 100.0 * (design.a.array() == 1).count() / static_cast<double>(design.n());
}

int thread_count(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("HETDOE_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

namespace {

double param(const ExperimentConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.simulator_params.find(key);
  return it == cfg.simulator_params.end() ? fallback : it->second;
}

Mat test_points(const ExperimentConfig& cfg, int dim) {
  return dim == 1 ? Mat(unit_grid(cfg.test_grid)) : tensor_grid(cfg.test_grid, dim);
}

std::string action_name(Action a) { return a == Action::Explore ? "explore" : "replicate"; }

std::string trace_header(int d) {
  std::string h = "iter,N,n,ratio,h,action";
  for (int p = 0; p < d; ++p) h += ",x" + std::to_string(p + 1);
  return h + ",y,elapsed_ms";
}

std::string trace_line(const TraceRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.iter << ',' << r.N << ',' << r.n << ',' << double(r.n) / double(r.N) << ',' << r.h << ','
     << action_name(r.action);
  for (Eigen::Index p = 0; p < r.x.size(); ++p) os << ',' << r.x[p];
  os << ',' << r.y << ',';
  os.precision(6);
  os << r.elapsed_ms;
  return os.str();
}

const char* kMetricsHeader = "iter,N,n,rmse,log_noise_rmse,score";

std::string metrics_line(const MetricsRow& m) {
  std::ostringstream os;
  os.precision(17);
  os << m.iter << ',' << m.N << ',' << m.n << ',' << m.rmse << ',' << m.log_noise_rmse << ',' << m.score;
  return os.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<TraceRow> read_trace(const std::string& path, int d, int up_to) {
  std::vector<TraceRow> rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    const auto c = split(line);
    if (static_cast<int>(c.size()) != 8 + d) continue;
    TraceRow r;
    r.iter = std::stoi(c[0]);
    if (r.iter > up_to) break;
    r.N = std::stol(c[1]);
    r.n = std::stoi(c[2]);
    r.h = std::stoi(c[4]);
    r.action = c[5] == "explore" ? Action::Explore : Action::Replicate;
    r.x.resize(d);
    for (int p = 0; p < d; ++p) r.x[p] = std::stod(c[6 + p]);
    r.y = std::stod(c[6 + d]);
    r.elapsed_ms = std::stod(c[7 + d]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRow> read_metrics(const std::string& path, int up_to) {
  std::vector<MetricsRow> rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    const auto c = split(line);
    if (c.size() != 6) continue;
    MetricsRow m;
    m.iter = std::stoi(c[0]);
    if (m.iter > up_to) break;
    m.N = std::stol(c[1]);
    m.n = std::stoi(c[2]);
    m.rmse = std::stod(c[3]);
    m.log_noise_rmse = std::stod(c[4]);
    m.score = std::stod(c[5]);
    rows.push_back(m);
  }
  return rows;
}

class SeedWriter {
 public:
  SeedWriter(const ExperimentConfig& cfg, std::uint64_t seed, int dim) : enabled_(!cfg.output_dir.empty()) {
    if (!enabled_) return;
    fs::create_directories(cfg.output_dir);
    const std::string s = std::to_string(seed);
    trace_path_ = (fs::path(cfg.output_dir) / ("trace_" + s + ".csv")).string();
    metrics_path_ = (fs::path(cfg.output_dir) / ("metrics_" + s + ".csv")).string();
    checkpoint_path_ = (fs::path(cfg.output_dir) / ("design_" + s + ".json")).string();
    dim_ = dim;
  }

  bool enabled() const { return enabled_; }
  const std::string& checkpoint_path() const { return checkpoint_path_; }
  const std::string& trace_path() const { return trace_path_; }
  const std::string& metrics_path() const { return metrics_path_; }

  void start(const std::vector<TraceRow>& trace, const std::vector<MetricsRow>& metrics) {
    if (!enabled_) return;
    trace_.open(trace_path_, std::ios::trunc);
    metrics_.open(metrics_path_, std::ios::trunc);
    trace_ << trace_header(dim_) << '\n';
    metrics_ << kMetricsHeader << '\n';
    for (const auto& r : trace) trace_ << trace_line(r) << '\n';
    for (const auto& m : metrics) metrics_ << metrics_line(m) << '\n';
    trace_.flush();
    metrics_.flush();
  }
  void trace(const TraceRow& r) {
    if (enabled_) trace_ << trace_line(r) << '\n' << std::flush;
  }
  void metrics(const MetricsRow& m) {
    if (enabled_) metrics_ << metrics_line(m) << '\n' << std::flush;
  }
  void checkpoint(const Checkpoint& cp) {
    if (!enabled_) return;
    const std::string tmp = checkpoint_path_ + ".tmp";
    write_file(tmp, checkpoint_to_json(cp));
    fs::rename(tmp, checkpoint_path_);
  }

 private:
  bool enabled_ = false;
  int dim_ = 1;
  std::string trace_path_, metrics_path_, checkpoint_path_;
  std::ofstream trace_, metrics_;
};

double evaluate_with_retry(const Simulator& sim, const Vec& u, std::uint64_t seed, std::uint64_t stream,
                           int iteration) {
  try {
    Rng rng(derive_seed(seed, {stream, static_cast<std::uint64_t>(iteration), 0}));
    return sim.eval(u, rng);
  } catch (const std::exception&) {
    Rng rng(derive_seed(seed, {stream, static_cast<std::uint64_t>(iteration), 1}));
    return sim.eval(u, rng);
  }
}

}  // namespace

std::unique_ptr<Simulator> make_simulator(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.simulator == "forrester") return std::make_unique<ForresterSimulator>();
  if (cfg.simulator == "synthetic") {
    SyntheticConfig sc;
    sc.theta = param(cfg, "theta", sc.theta);
    sc.nu = param(cfg, "nu", sc.nu);
    sc.theta_g = param(cfg, "theta_g", sc.theta_g);
    sc.nu_g = param(cfg, "nu_g", sc.nu_g);
    sc.grid = static_cast<int>(param(cfg, "grid", sc.grid));
    return std::make_unique<SyntheticHetGP>(sc, derive_seed(seed, {7}));
  }
  if (cfg.simulator == "sir") {
    SirParams sp;
    sp.beta = param(cfg, "beta", sp.beta);
    sp.gamma = param(cfg, "gamma", sp.gamma);
    sp.population = static_cast<long>(param(cfg, "population", static_cast<double>(sp.population)));
    return std::make_unique<SirSimulator>(sp);
  }
  throw std::invalid_argument("unknown simulator: " + cfg.simulator);
}

TruthTable test_truth(const ExperimentConfig& cfg, const Simulator& sim, std::uint64_t seed) {
  const Mat U = test_points(cfg, sim.dim());
  const Vec u0 = U.row(0).transpose();
  if (sim.truth_mean(u0) && sim.truth_noise(u0)) return estimate_truth(sim, U, 0, seed);
  if (!cfg.truth_cache.empty() && fs::exists(cfg.truth_cache)) {
    TruthTable t = read_truth_cache(cfg.truth_cache);
    if (t.points.rows() == U.rows() && t.points.cols() == U.cols() && (t.points - U).cwiseAbs().maxCoeff() < 1e-12)
      return t;
  }
  const std::uint64_t truth_seed = derive_seed(0x7275746855ULL, {});
  TruthTable t = estimate_truth(sim, U, cfg.truth_replicates, truth_seed);
  if (!cfg.truth_cache.empty()) {
    const fs::path parent = fs::path(cfg.truth_cache).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    json manifest = {{"simulator", cfg.simulator},
                     {"params", cfg.simulator_params},
                     {"replicates", cfg.truth_replicates},
                     {"seed", truth_seed},
                     {"test_grid", cfg.test_grid}};
    write_truth_cache(cfg.truth_cache, t, manifest.dump(2));
  }
  return t;
}

MetricsRow evaluate_model(const HetGP& model, const TruthTable& truth) {
  const Eigen::Index m = truth.points.rows();
  Vec mu(m), s2(m), r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec x = truth.points.row(i).transpose();
    const NoisePrediction np = model.predict_noise(x);
    const Prediction p = model.surrogate().predict(x, np.r);
    mu[i] = p.mean;
    r[i] = np.r;
    s2[i] = std::max(p.sigma2, 1e-300);
  }
  MetricsRow row;
  row.N = model.design().total();
  row.n = model.design().n();
  row.rmse = rmse(mu, truth.mean);
  row.log_noise_rmse = log_noise_rmse(r, truth.variance);
  row.score = expected_score(mu, s2, truth.mean, truth.variance);
  return row;
}

Mat initial_inputs(const ExperimentConfig& cfg, int dim, std::uint64_t seed) {
  Mat base;
  if (cfg.init.design == "grid") {
    if (dim == 1) {
      base = unit_grid(cfg.init.n);
    } else {
      const int per = std::max(2, static_cast<int>(std::lround(std::pow(cfg.init.n, 1.0 / dim))));
      base = tensor_grid(per, dim);
    }
  } else {
    Rng rng(derive_seed(seed, {0}));
    base = maximin_lhs(cfg.init.n, dim, rng);
  }
  Mat X(base.rows() * cfg.init.replicates, dim);
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (int j = 0; j < cfg.init.replicates; ++j) X.row(i * cfg.init.replicates + j) = base.row(i);
  return X;
}

HetGPOptions model_options(const ExperimentConfig& cfg) {
  HetGPOptions o;
  o.family = cfg.kernel;
  o.noise_family = cfg.noise_kernel;
  o.force_homoskedastic = cfg.model == "homgp";
  return o;
}

SeedReport run_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool resume, int stop_after_iterations) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SeedReport report;
  report.seed = seed;
  const auto sim = make_simulator(cfg, seed);
  const int d = sim->dim();
  const HetGPOptions opts = model_options(cfg);
  SeedWriter writer(cfg, seed, d);
  const TruthTable truth = test_truth(cfg, *sim, seed);

  HetGP model;
  int iteration = 0;
  int h = cfg.horizon.mode == HorizonMode::Adapt ? 0 : cfg.horizon.h;
  Action last_action = Action::Explore;
  bool resumed = false;

  if (resume && writer.enabled() && fs::exists(writer.checkpoint_path())) {
    const Checkpoint cp = checkpoint_from_json(read_file(writer.checkpoint_path()));
    if (cp.seed != seed) throw std::runtime_error("checkpoint seed does not match");
    iteration = cp.iteration;
    h = cp.horizon;
    last_action = cp.last_action;
    model = HetGP(cp.design, cp.params, opts, cp.mean_offset);
    report.trace = read_trace(writer.trace_path(), d, iteration);
    report.metrics = read_metrics(writer.metrics_path(), iteration);
    writer.start(report.trace, report.metrics);
    resumed = true;
  }

  try {
    if (!resumed) {
      const Mat X = initial_inputs(cfg, d, seed);
      Vec Y(X.rows());
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        Y[i] = evaluate_with_retry(*sim, X.row(i).transpose(), seed, 1, static_cast<int>(i));
      model = HetGP::fit(ingest(X, Y), opts);
      MetricsRow m = evaluate_model(model, truth);
      m.iter = 0;
      report.metrics.push_back(m);
      writer.start({}, report.metrics);
      writer.checkpoint({0, h, last_action, seed, model.design(), model.params(), model.mean_offset()});
    }

    LookaheadConfig lc;
    lc.epsilon = cfg.epsilon;
    lc.starts = cfg.search_starts;
    lc.max_iterations = cfg.search_iterations;
    lc.threads = cfg.seeds.size() == 1 ? thread_count(cfg) : 1;

    int performed = 0;
    while (model.design().total() < cfg.budget) {
      if (stop_after_iterations >= 0 && performed >= stop_after_iterations) break;
      const auto it0 = clock::now();
      const int t = iteration + 1;
      const Surrogate& s = model.surrogate();

      switch (cfg.horizon.mode) {
        case HorizonMode::Fixed: h = cfg.horizon.h; break;
        case HorizonMode::Target:
          if (iteration > 0) h = horizon_target(h, s.n(), s.design().total(), cfg.horizon.rho, last_action);
          break;
        case HorizonMode::Adapt: {
          Rng rng(derive_seed(seed, {4, static_cast<std::uint64_t>(t)}));
          h = horizon_adapt(s, rng);
          break;
        }
      }

      lc.seed = derive_seed(seed, {3, static_cast<std::uint64_t>(t)});
      const DesignDecision dec = choose_next(s, model.noise_function(), h, lc);
      if (cfg.verbosity >= 1) {
        json line = {{"seed", seed}, {"iter", t}, {"h", h}, {"action", action_name(dec.action)},
                     {"value", dec.value}, {"x", std::vector<double>(dec.x.data(), dec.x.data() + dec.x.size())}};
        json paths = json::array();
        for (const auto& p : dec.paths) paths.push_back(p.terminal);
        line["paths"] = paths;
        static std::mutex log_mutex;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << line.dump() << '\n';
      }

      const double y = evaluate_with_retry(*sim, dec.x, seed, 2, t);
      UniqueDesign updated = model.design();
      int k = dec.k;
      if (dec.action == Action::Replicate) updated.add_to(k, y);
      else k = updated.add(dec.x, y).first;

      // Latent for the touched location, then refit or a quick rebuild.
      HetGPParams next = model.params();
      if (!next.homoskedastic) {
        const LatentFusion fused = model.fuse_at(updated, k);
        next = extend_params(next, updated.n(), fused.delta);
        next.delta[k] = std::clamp(fused.delta, opts.delta_lower, opts.delta_upper);
      }
      const int n = updated.n();
      const bool want_hetero = !opts.force_homoskedastic && n >= opts.min_hetero_n;
      const bool crossed = want_hetero ? n == opts.min_hetero_n : !next.homoskedastic;
      const bool refit = n <= cfg.refit.full_until_n || t % cfg.refit.every == 0 || crossed;
      if (refit) {
        const bool cold = n < cfg.refit.restart_until_n && t % cfg.refit.restart_every == 0;
        model = HetGP::fit(updated, opts, &next, cold);
      } else {
        model = HetGP(updated, next, opts, response_mean(updated));
      }

      iteration = t;
      ++performed;
      last_action = dec.action;
      TraceRow row;
      row.iter = t;
      row.N = model.design().total();
      row.n = model.design().n();
      row.h = h;
      row.action = dec.action;
      row.x = dec.x;
      row.y = y;
      row.elapsed_ms = std::chrono::duration<double, std::milli>(clock::now() - it0).count();
      report.trace.push_back(row);
      writer.trace(row);
      if (t % cfg.metrics_every == 0 || model.design().total() >= cfg.budget) {
        MetricsRow m = evaluate_model(model, truth);
        m.iter = t;
        report.metrics.push_back(m);
        writer.metrics(m);
      }
      writer.checkpoint({t, h, last_action, seed, model.design(), model.params(), model.mean_offset()});
    }
  } catch (const std::exception& e) {
    report.failed = true;
    report.error = e.what();
  }
  if (model.surrogate().n() > 0) report.design = model.design();
  report.elapsed_s = std::chrono::duration<double>(clock::now() - t0).count();
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, bool resume) {
  cfg.validate();
  ExperimentReport out;
  out.seeds.resize(cfg.seeds.size());
  const int threads = std::max(1, std::min<int>(thread_count(cfg), static_cast<int>(cfg.seeds.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) out.seeds[i] = run_seed(cfg, cfg.seeds[i], resume);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!cfg.output_dir.empty()) {
    json seeds = json::array();
    for (const auto& r : out.seeds) {
      json s = {{"seed", r.seed},
                {"failed", r.failed},
                {"N", r.design.total()},
                {"n", r.design.n()},
                {"ratio", r.final_ratio()},
                {"singleton_percentage", r.singleton_percentage()},
                {"elapsed_s", r.elapsed_s}};
      if (!r.error.empty()) s["error"] = r.error;
      if (!r.metrics.empty()) {
        const auto& m = r.metrics.back();
        s["rmse"] = m.rmse;
        s["log_noise_rmse"] = m.log_noise_rmse;
        s["score"] = m.score;
      }
      seeds.push_back(s);
    }
    json summary = {{"config", json::parse(config_to_json(cfg))},
                    {"refit_cadence",
                     {{"full_refit_while_n_at_most", cfg.refit.full_until_n},
                      {"then_every", cfg.refit.every},
                      {"cold_restart_every", cfg.refit.restart_every},
                      {"cold_restart_while_n_below", cfg.refit.restart_until_n}}},
                    {"seeds", seeds}};
    write_file((fs::path(cfg.output_dir) / "summary.json").string(), summary.dump(2) + "\n");
  }
  return out;
}

}  // namespace hetdoe
