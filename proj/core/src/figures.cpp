#include "hetdoe/figures.hpp"

#include "hetdoe/metrics.hpp"
#include "hetdoe/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace hetdoe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kFig1Design[5] = {0.05, 0.2, 0.45, 0.7, 0.9};
constexpr double kFig1Noise[5] = {0.05, 0.2, 0.05, 0.05, 0.05};
constexpr double kFig1Width = 0.002;
constexpr double kHighLevel = 20.0;
constexpr double kLowLevel = 0.3;
constexpr double kLowFloor = 0.001;
constexpr double kDipCenter = 0.32, kDipWidth = 0.002;

struct ValueGrad {
  double v = 0.0, d = 0.0;
};

ValueGrad gauss_bump(double x, double center, double width) {
  const double e = std::exp(-(x - center) * (x - center) / width);
  return {e, -2.0 * (x - center) / width * e};
}

ValueGrad laplace_bump(double x, double center, double width) {
  const double e = std::exp(-std::abs(x - center) / width);
  return {e, x == center ? 0.0 : -(x > center ? 1.0 : -1.0) / width * e};
}

// prod_i (1 - exp(-|x - x_i| / w)) over the design, skipping one index: zero
// at the (remaining) design points, with a kink there, and close to one
// between them.
ValueGrad fig1_gap(double x, int skip = -1) {
  ValueGrad out{1.0, 0.0};
  for (int i = 0; i < 5; ++i) {
    if (i == skip) continue;
    const ValueGrad b = laplace_bump(x, kFig1Design[i], kFig1Width);
    out.d = out.d * (1.0 - b.v) - out.v * b.d;
    out.v *= 1.0 - b.v;
  }
  return out;
}

// Smooth curve through the design noise levels.
ValueGrad fig1_base(double x) {
  const ValueGrad b = gauss_bump(x, kFig1Design[1], kFig1Width);
  const ValueGrad g = fig1_gap(x, 1);
  const double h = kFig1Noise[1] - kFig1Noise[0];
  return {kFig1Noise[0] + h * b.v * g.v, h * (b.d * g.v + b.v * g.d)};
}

ValueGrad fig1_high(double x) {
  const ValueGrad b = fig1_base(x), g = fig1_gap(x);
  return {b.v + kHighLevel * g.v, b.d + kHighLevel * g.d};
}

// Low away from the design, with a dip to kLowFloor around kDipCenter.
ValueGrad fig1_low(double x) {
  const ValueGrad b = fig1_base(x), g = fig1_gap(x), dip = gauss_bump(x, kDipCenter, kDipWidth);
  const double level = kLowLevel - (kLowLevel - kLowFloor) * dip.v;
  const double dlevel = -(kLowLevel - kLowFloor) * dip.d;
  return {b.v + g.v * level, b.d + g.d * level + g.v * dlevel};
}

struct Csv {
  std::ofstream out;
  explicit Csv(const std::string& path) : out(path) {
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(12);
  }
};

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_manifest(const std::string& outdir, const json& manifest, std::vector<std::string>& files) {
  const std::string p = path_in(outdir, "manifest.json");
  write_file(p, manifest.dump(2) + "\n");
  files.push_back(p);
}

ExperimentConfig forrester_config(const FigureOptions& o) {
  ExperimentConfig cfg;
  cfg.simulator = "forrester";
  cfg.kernel = KernelFamily::Gaussian;
  cfg.init.n = 10;
  cfg.init.replicates = 1;
  cfg.budget = o.budget;
  cfg.seeds = o.seeds;
  cfg.threads = o.threads;
  cfg.test_grid = 201;
  cfg.metrics_every = 50;
  return cfg;
}

struct Variant {
  std::string name;
  HorizonMode mode;
  int h;
};

}  // namespace

Fig1Setup fig1_setup() {
  UniqueDesign design(1);
  for (double x : kFig1Design) design.append(Vec::Constant(1, x), 0.0);
  Fig1Setup s;
  s.surrogate = Surrogate(KernelSpec::isotropic(KernelFamily::Gaussian, 1, 0.01, 1.0), design,
                          Eigen::Map<const Vec>(kFig1Noise, 5));
  s.r_high = [](double x) { return fig1_high(x).v; };
  s.r_low = [](double x) { return fig1_low(x).v; };
  s.dr_high = [](double x) { return fig1_high(x).d; };
  s.dr_low = [](double x) { return fig1_low(x).d; };
  return s;
}

Fig3Setup fig3_setup(std::uint64_t seed) {
  const Vec grid = unit_grid(21);
  Mat X(105, 1);
  Vec Y(105);
  Rng rng(derive_seed(seed, {21, 5}));
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 5; ++j) {
      X(5 * i + j, 0) = grid[i];
      Y[5 * i + j] = forrester(grid[i], rng);
    }
  Fig3Setup out;
  out.seed = seed;
  out.model = HetGP::fit(ingest(X, Y), HetGPOptions{});
  return out;
}

std::vector<std::string> replicate_figure(const std::string& figure_id, const std::string& outdir,
                                          const FigureOptions& options) {
  fs::create_directories(outdir);
  std::vector<std::string> files;
  json manifest = {{"figure", figure_id}};

  if (figure_id == "fig1") {
    const Fig1Setup s = fig1_setup();
    const Vec grid = Vec::LinSpaced(512, 0.0, 1.0);
    const std::string p = path_in(outdir, "fig1_profiles.csv");
    {
      Csv csv(p);
      csv.out << "x,r_high,r_low,imspe_high,imspe_low,threshold\n";
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec x = Vec::Constant(1, grid[i]);
        const double rh = s.r_high(grid[i]), rl = s.r_low(grid[i]);
        const ReplicationCheck rc = replication_condition(s.surrogate, x, rh);
        csv.out << grid[i] << ',' << rh << ',' << rl << ',' << imspe_next(s.surrogate, x, rh) << ','
                << imspe_next(s.surrogate, x, rl) << ',' << rc.threshold << '\n';
      }
    }
    files.push_back(p);
    const std::string pd = path_in(outdir, "fig1_design.csv");
    {
      Csv csv(pd);
      csv.out << "index,x,r,imspe_replicate\n";
      const Vec rep = imspe_replicate_all(s.surrogate);
      for (int k = 0; k < s.surrogate.n(); ++k)
        csv.out << (k + 1) << ',' << s.surrogate.design().x(k, 0) << ',' << s.surrogate.noise()[k] << ',' << rep[k]
                << '\n';
    }
    files.push_back(pd);
    json choices = json::array();
    for (const bool high : {true, false}) {
      const auto r = high ? s.r_high : s.r_low;
      const auto dr = high ? s.dr_high : s.dr_low;
      const NoiseFunction nf = [r, dr](const VecRef& x) {
        NoisePrediction np;
        np.r = r(x[0]);
        np.dr = Vec::Constant(1, dr(x[0]));
        return np;
      };
      const NextPoint np = optimize_next(s.surrogate, nf, SearchOptions{});
      choices.push_back({{"regime", high ? "high" : "low"},
                         {"replicate", np.is_replicate},
                         {"index", np.is_replicate ? np.k + 1 : 0},
                         {"x", np.x[0]},
                         {"value", np.value}});
    }
    manifest["files"] = {{"profiles", "fig1_profiles.csv"}, {"design", "fig1_design.csv"}};
    manifest["kernel"] = {{"family", "Gaussian"}, {"nu", 1.0}, {"theta", 0.01}};
    manifest["choices"] = choices;
  } else if (figure_id == "fig2") {
    const Fig3Setup s = fig3_setup();
    LookaheadConfig lc;
    lc.seed = 1;
    const DesignDecision dec = choose_next(s.model.surrogate(), s.model.noise_function(), 3, lc);
    const std::string p = path_in(outdir, "fig2_paths.csv");
    {
      Csv csv(p);
      csv.out << "path,step,action,index,x,terminal\n";
      for (std::size_t j = 0; j < dec.paths.size(); ++j) {
        const auto& path = dec.paths[j];
        for (std::size_t st = 0; st < path.steps.size(); ++st) {
          const auto& step = path.steps[st];
          csv.out << j << ',' << (st + 1) << ',' << (step.action == Action::Explore ? "explore" : "replicate") << ','
                  << (step.k + 1) << ',' << step.x[0] << ',' << path.terminal << '\n';
        }
      }
    }
    files.push_back(p);
    manifest["files"] = {{"paths", "fig2_paths.csv"}};
    manifest["horizon"] = 3;
    manifest["decision"] = {{"action", dec.action == Action::Explore ? "explore" : "replicate"},
                            {"index", dec.k + 1},
                            {"x", dec.x[0]}};
  } else if (figure_id == "fig3") {
    const Fig3Setup s = fig3_setup();
    const Surrogate& sur = s.model.surrogate();
    const Vec batch = sk_allocation(sur, sur.noise(), 210.0);
    Eigen::VectorXi greedy = sur.design().a;
    Surrogate g = sur;
    for (int step = 0; step < 105; ++step) {
      int k = 0;
      imspe_replicate_all(g).minCoeff(&k);
      ++greedy[k];
      g = g.add_replicate(k);
    }
    const std::string p = path_in(outdir, "fig3_allocation.csv");
    {
      Csv csv(p);
      csv.out << "index,x,a,ybar,r_hat,batch,greedy\n";
      for (int i = 0; i < sur.n(); ++i)
        csv.out << (i + 1) << ',' << sur.design().x(i, 0) << ',' << sur.design().a[i] << ',' << sur.design().ybar[i]
                << ',' << sur.noise()[i] << ',' << batch[i] << ',' << greedy[i] << '\n';
    }
    files.push_back(p);
    manifest["files"] = {{"allocation", "fig3_allocation.csv"}};
    manifest["total"] = 210;
  } else if (figure_id == "fig4-ratios" || figure_id == "table1-style") {
    const bool table = figure_id == "table1-style";
    std::vector<Variant> variants = {{"h=-1", HorizonMode::Fixed, -1}, {"h=0", HorizonMode::Fixed, 0},
                                     {"h=3", HorizonMode::Fixed, 3}};
    if (!table) {
      variants.insert(variants.begin() + 2, {{"h=1", HorizonMode::Fixed, 1}, {"h=2", HorizonMode::Fixed, 2}});
      variants.push_back({"h=4", HorizonMode::Fixed, 4});
      variants.push_back({"adapt", HorizonMode::Adapt, 0});
      variants.push_back({"target", HorizonMode::Target, 0});
    }
    json rows = json::array();
    std::vector<std::vector<double>> ratio_curves;
    for (const auto& v : variants) {
      ExperimentConfig cfg = forrester_config(options);
      cfg.horizon.mode = v.mode;
      cfg.horizon.h = v.h;
      const ExperimentReport rep = run_experiment(cfg);
      Vec singles(rep.seeds.size()), times(rep.seeds.size()), ratios(rep.seeds.size()), errs(rep.seeds.size());
      for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
        singles[i] = rep.seeds[i].singleton_percentage();
        times[i] = rep.seeds[i].elapsed_s;
        ratios[i] = rep.seeds[i].final_ratio();
        errs[i] = rep.seeds[i].metrics.empty() ? NAN : rep.seeds[i].metrics.back().rmse;
      }
      rows.push_back({{"variant", v.name},
                      {"singleton_percentage", median(singles)},
                      {"time_s", median(times)},
                      {"ratio", median(ratios)},
                      {"rmse", median(errs)}});
      // Median ratio n/N after each iteration across seeds.
      std::size_t iters = 0;
      for (const auto& s : rep.seeds) iters = std::max(iters, s.trace.size());
      std::vector<double> curve(iters, NAN);
      for (std::size_t t = 0; t < iters; ++t) {
        std::vector<double> vals;
        for (const auto& s : rep.seeds)
          if (t < s.trace.size()) vals.push_back(double(s.trace[t].n) / double(s.trace[t].N));
        curve[t] = median(Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
      }
      ratio_curves.push_back(curve);
    }
    const std::string p = path_in(outdir, table ? "table1.csv" : "fig4_summary.csv");
    {
      Csv csv(p);
      csv.out << "variant,singleton_percentage,time_s,ratio,rmse\n";
      for (const auto& r : rows)
        csv.out << r["variant"].get<std::string>() << ',' << r["singleton_percentage"].get<double>() << ','
                << r["time_s"].get<double>() << ',' << r["ratio"].get<double>() << ',' << r["rmse"].get<double>()
                << '\n';
    }
    files.push_back(p);
    if (!table) {
      const std::string pc = path_in(outdir, "fig4_ratios.csv");
      Csv csv(pc);
      csv.out << "iter";
      for (const auto& v : variants) csv.out << ',' << v.name;
      csv.out << '\n';
      std::size_t iters = 0;
      for (const auto& c : ratio_curves) iters = std::max(iters, c.size());
      for (std::size_t t = 0; t < iters; ++t) {
        csv.out << (t + 1);
        for (const auto& c : ratio_curves) {
          csv.out << ',';
          if (t < c.size()) csv.out << c[t];
        }
        csv.out << '\n';
      }
      files.push_back(pc);
    }
    manifest["rows"] = rows;
    manifest["budget"] = options.budget;
    manifest["seeds"] = options.seeds;
  } else {
    throw std::invalid_argument("unknown figure id: " + figure_id);
  }
  write_manifest(outdir, manifest, files);
  return files;
}

}  // namespace hetdoe
