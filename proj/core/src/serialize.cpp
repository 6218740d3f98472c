#include "hetdoe/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hetdoe {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json design_json(const UniqueDesign& d) {
  json x = json::array();
  for (int i = 0; i < d.n(); ++i) x.push_back(vec_json(d.x.row(i).transpose()));
  std::vector<int> a(d.a.data(), d.a.data() + d.a.size());
  return {{"dim", d.dim()}, {"x", x}, {"a", a}, {"ybar", vec_json(d.ybar)}, {"s2", vec_json(d.s2)}};
}

UniqueDesign json_design(const json& j) {
  const int dim = j.at("dim").get<int>();
  UniqueDesign d(dim);
  const auto& x = j.at("x");
  const int n = static_cast<int>(x.size());
  d.x.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const Vec row = json_vec(x[i]);
    if (row.size() != dim) throw std::runtime_error("design json: row dimension mismatch");
    d.x.row(i) = row.transpose();
  }
  const auto a = j.at("a").get<std::vector<int>>();
  d.a = Eigen::Map<const Eigen::VectorXi>(a.data(), static_cast<Eigen::Index>(a.size()));
  d.ybar = json_vec(j.at("ybar"));
  d.s2 = json_vec(j.at("s2"));
  if (d.a.size() != n || d.ybar.size() != n || d.s2.size() != n)
    throw std::runtime_error("design json: inconsistent lengths");
  if ((d.a.array() < 1).any()) throw std::runtime_error("design json: replicate counts must be >= 1");
  return d;
}

json params_json(const HetGPParams& p) {
  json j = {{"homoskedastic", p.homoskedastic}, {"theta", vec_json(p.theta)}, {"log_lambda", p.log_lambda}};
  if (!p.homoskedastic) {
    j["theta_g"] = vec_json(p.theta_g);
    j["g"] = p.g;
    j["delta"] = vec_json(p.delta);
  }
  return j;
}

HetGPParams json_params(const json& j) {
  HetGPParams p;
  p.homoskedastic = j.at("homoskedastic").get<bool>();
  p.theta = json_vec(j.at("theta"));
  p.log_lambda = j.value("log_lambda", 0.0);
  if (!p.homoskedastic) {
    p.theta_g = json_vec(j.at("theta_g"));
    p.g = j.at("g").get<double>();
    p.delta = json_vec(j.at("delta"));
  }
  return p;
}

std::string action_name(Action a) { return a == Action::Explore ? "explore" : "replicate"; }

Action action_from(const std::string& s) {
  if (s == "explore") return Action::Explore;
  if (s == "replicate") return Action::Replicate;
  throw std::runtime_error("unknown action: " + s);
}

}  // namespace

std::string design_to_json(const UniqueDesign& design) { return design_json(design).dump(2); }

UniqueDesign design_from_json(const std::string& text) { return json_design(json::parse(text)); }

std::string model_to_json(const HetGP& model) {
  json j = params_json(model.params());
  j["kernel"] = std::string(to_string(model.options().family));
  j["noise_kernel"] = std::string(to_string(model.options().noise_family));
  j["mean_offset"] = model.mean_offset();
  j["nu_hat"] = model.nu_hat();
  j["nu_hat_g"] = model.nu_hat_g();
  j["log_likelihood"] = model.log_likelihood();
  return j.dump(2);
}

HetGP model_from_json(const std::string& text, const UniqueDesign& design, const HetGPOptions& options) {
  const json j = json::parse(text);
  HetGPOptions opts = options;
  if (j.contains("kernel")) opts.family = kernel_family_from_string(j["kernel"].get<std::string>());
  if (j.contains("noise_kernel")) opts.noise_family = kernel_family_from_string(j["noise_kernel"].get<std::string>());
  return HetGP(design, json_params(j), opts, j.at("mean_offset").get<double>());
}

std::string checkpoint_to_json(const Checkpoint& cp) {
  json j = {{"iteration", cp.iteration},
            {"horizon", cp.horizon},
            {"last_action", action_name(cp.last_action)},
            {"seed", cp.seed},
            {"design", design_json(cp.design)},
            {"model", params_json(cp.params)},
            {"mean_offset", cp.mean_offset}};
  return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = json::parse(text);
  Checkpoint cp;
  cp.iteration = j.at("iteration").get<int>();
  cp.horizon = j.at("horizon").get<int>();
  cp.last_action = action_from(j.at("last_action").get<std::string>());
  cp.seed = j.at("seed").get<std::uint64_t>();
  cp.design = json_design(j.at("design"));
  cp.params = json_params(j.at("model"));
  cp.mean_offset = j.at("mean_offset").get<double>();
  return cp;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["simulator"] = {{"id", cfg.simulator}, {"params", cfg.simulator_params}};
  j["kernel"] = std::string(to_string(cfg.kernel));
  j["noise_kernel"] = std::string(to_string(cfg.noise_kernel));
  j["init"] = {{"design", cfg.init.design}, {"n", cfg.init.n}, {"replicates", cfg.init.replicates}};
  j["budget"] = cfg.budget;
  j["horizon"] = {{"mode", std::string(to_string(cfg.horizon.mode))}, {"h", cfg.horizon.h}, {"rho", cfg.horizon.rho}};
  j["model"] = cfg.model;
  j["seeds"] = cfg.seeds;
  j["test_grid"] = cfg.test_grid;
  j["truth_replicates"] = cfg.truth_replicates;
  j["truth_cache"] = cfg.truth_cache;
  j["refit"] = {{"full_until_n", cfg.refit.full_until_n},
                {"every", cfg.refit.every},
                {"restart_every", cfg.refit.restart_every},
                {"restart_until_n", cfg.refit.restart_until_n}};
  j["metrics_every"] = cfg.metrics_every;
  j["epsilon"] = cfg.epsilon;
  j["search"] = {{"starts", cfg.search_starts}, {"iterations", cfg.search_iterations}};
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;
  j["verbosity"] = cfg.verbosity;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("simulator")) {
    const auto& s = j["simulator"];
    if (s.is_string()) {
      cfg.simulator = s.get<std::string>();
    } else {
      cfg.simulator = s.value("id", cfg.simulator);
      if (s.contains("params")) cfg.simulator_params = s["params"].get<std::map<std::string, double>>();
    }
  }
  if (j.contains("kernel")) cfg.kernel = kernel_family_from_string(j["kernel"].get<std::string>());
  if (j.contains("noise_kernel")) cfg.noise_kernel = kernel_family_from_string(j["noise_kernel"].get<std::string>());
  if (j.contains("init")) {
    const auto& i = j["init"];
    cfg.init.design = i.value("design", cfg.init.design);
    cfg.init.n = i.value("n", cfg.init.n);
    cfg.init.replicates = i.value("replicates", cfg.init.replicates);
  }
  cfg.budget = j.value("budget", cfg.budget);
  if (j.contains("horizon")) {
    const auto& h = j["horizon"];
    if (h.contains("mode")) cfg.horizon.mode = horizon_mode_from_string(h["mode"].get<std::string>());
    cfg.horizon.h = h.value("h", cfg.horizon.h);
    cfg.horizon.rho = h.value("rho", cfg.horizon.rho);
  }
  cfg.model = j.value("model", cfg.model);
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  cfg.test_grid = j.value("test_grid", cfg.test_grid);
  cfg.truth_replicates = j.value("truth_replicates", cfg.truth_replicates);
  cfg.truth_cache = j.value("truth_cache", cfg.truth_cache);
  if (j.contains("refit")) {
    const auto& r = j["refit"];
    cfg.refit.full_until_n = r.value("full_until_n", cfg.refit.full_until_n);
    cfg.refit.every = r.value("every", cfg.refit.every);
    cfg.refit.restart_every = r.value("restart_every", cfg.refit.restart_every);
    cfg.refit.restart_until_n = r.value("restart_until_n", cfg.refit.restart_until_n);
  }
  cfg.metrics_every = j.value("metrics_every", cfg.metrics_every);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  if (j.contains("search")) {
    cfg.search_starts = j["search"].value("starts", cfg.search_starts);
    cfg.search_iterations = j["search"].value("iterations", cfg.search_iterations);
  }
  cfg.threads = j.value("threads", cfg.threads);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.verbosity = j.value("verbosity", cfg.verbosity);
  cfg.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace hetdoe
