#include "hetdoe/lookahead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace hetdoe {

std::string_view to_string(HorizonMode mode) {
  switch (mode) {
    case HorizonMode::Fixed: return "fixed";
    case HorizonMode::Target: return "target";
    case HorizonMode::Adapt: return "adapt";
  }
  return "fixed";
}

HorizonMode horizon_mode_from_string(std::string_view name) {
  if (name == "fixed") return HorizonMode::Fixed;
  if (name == "target") return HorizonMode::Target;
  if (name == "adapt") return HorizonMode::Adapt;
  throw std::invalid_argument("unknown horizon mode: " + std::string(name));
}

namespace {

int greedy_replicate(const Surrogate& s, double* value) {
  int k = 0;
  const double v = imspe_replicate_all(s).minCoeff(&k);
  if (value) *value = v;
  return k;
}

SearchOptions search_options(const LookaheadConfig& cfg, std::uint64_t seed, bool ties) {
  SearchOptions so;
  so.epsilon = cfg.epsilon;
  so.replicate_ties = ties;
  so.starts = cfg.starts;
  so.max_iterations = cfg.max_iterations;
  so.seed = seed;
  return so;
}

// Explore once from `start` (after `prefix` replicates), then replicate
// greedily until the horizon.
DecisionPath run_path(const Surrogate& start, const std::vector<PathStep>& prefix, const NoiseFunction& noise,
                      int h, const LookaheadConfig& cfg, std::uint64_t seed) {
  DecisionPath path;
  path.steps = prefix;
  const NextPoint xp = optimize_continuous(start, noise, search_options(cfg, seed, false));
  const Vec x = xp.x;
  PathStep explore;
  explore.action = Action::Explore;
  explore.k = start.n();
  explore.x = x;
  path.steps.push_back(explore);
  const int remaining = h - static_cast<int>(prefix.size());
  if (remaining == 0) {
    path.terminal = xp.value;
    return path;
  }
  Surrogate s = start.extend_new_location(x, noise(x).r);
  for (int step = 0; step < remaining; ++step) {
    double value = 0.0;
    const int k = greedy_replicate(s, &value);
    PathStep rep;
    rep.k = k;
    rep.x = s.design().x.row(k).transpose();
    path.steps.push_back(rep);
    if (step + 1 == remaining)
      path.terminal = value;
    else
      s = s.add_replicate(k);
  }
  return path;
}

}  // namespace

DesignDecision choose_next(const Surrogate& s, const NoiseFunction& noise, int h, const LookaheadConfig& cfg) {
  if (h < -1) throw std::invalid_argument("choose_next: horizon must be >= -1");
  DesignDecision out;
  out.horizon = h;
  if (h <= 0 || s.n() == 0) {
    const NextPoint np = optimize_next(s, noise, search_options(cfg, derive_seed(cfg.seed, {0}), h >= 0));
    out.action = np.is_replicate ? Action::Replicate : Action::Explore;
    out.k = np.k;
    out.x = np.x;
    out.value = np.value;
    out.discrete_searches = s.n() > 0 && h >= 0 ? 1 : 0;
    return out;
  }

  // Shared replicate prefix: states after j = 0..h greedy replicates.
  std::vector<Surrogate> states{s};
  std::vector<PathStep> chain;
  states.reserve(h + 1);
  for (int j = 1; j <= h; ++j) {
    const int k = greedy_replicate(states.back(), nullptr);
    PathStep rep;
    rep.k = k;
    rep.x = states.back().design().x.row(k).transpose();
    chain.push_back(rep);
    states.push_back(states.back().add_replicate(k));
  }
  out.discrete_searches = h + h * (h + 1) / 2;

  out.paths.resize(h + 1);
  auto evaluate = [&](int j) {
    const std::vector<PathStep> prefix(chain.begin(), chain.begin() + j);
    out.paths[j] = run_path(states[j], prefix, noise, h, cfg, derive_seed(cfg.seed, {1, std::uint64_t(j)}));
  };
  const int threads = std::max(1, std::min(cfg.threads, h + 1));
  if (threads == 1) {
    for (int j = 0; j <= h; ++j) evaluate(j);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int j = t; j <= h; j += threads) evaluate(j);
      });
    for (auto& th : pool) th.join();
  }

  double best_replicate = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= h; ++j) best_replicate = std::min(best_replicate, out.paths[j].terminal);
  const DecisionPath& first = out.paths[0];
  if (first.terminal < best_replicate) {
    const Vec& x = first.steps.front().x;
    const int near = s.design().find(x, cfg.epsilon);
    if (near >= 0) {
      out.action = Action::Replicate;
      out.k = near;
      out.x = s.design().x.row(near).transpose();
    } else {
      out.action = Action::Explore;
      out.x = x;
    }
    out.value = first.terminal;
  } else {
    out.action = Action::Replicate;
    out.k = chain.front().k;
    out.x = chain.front().x;
    out.value = best_replicate;
  }
  return out;
}

int horizon_target(int h, int n, long N, double rho, Action last_action) {
  if (N <= 0) throw std::invalid_argument("horizon_target: N must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("horizon_target: rho must lie in (0, 1)");
  const double ratio = static_cast<double>(n) / static_cast<double>(N);
  if (ratio > rho && last_action == Action::Explore) return h + 1;
  if (ratio < rho && last_action == Action::Replicate) return std::max(h - 1, -1);
  return h;
}

Vec sk_allocation(const Surrogate& s, const VecRef& noise, double N_total) {
  const int n = s.n();
  if (noise.size() != n) throw std::invalid_argument("sk_allocation: noise size mismatch");
  const Mat P = s.Kinv() * s.W();
  Vec weight(n);
  for (int i = 0; i < n; ++i) {
    const double Ki = std::max(0.0, P.row(i).dot(s.Kinv().col(i)));
    weight[i] = std::sqrt(std::max(0.0, noise[i]) * Ki);
  }
  const double total = weight.sum();
  if (!(total > 0.0)) return Vec::Constant(n, N_total / n);
  return N_total * weight / total;
}

Eigen::VectorXi allocation_deficits(const Surrogate& s) {
  const Vec target = sk_allocation(s, s.noise(), static_cast<double>(s.design().total()));
  Eigen::VectorXi deficit(s.n());
  for (int i = 0; i < s.n(); ++i)
    deficit[i] = std::max(0, static_cast<int>(std::nearbyint(target[i])) - s.design().a[i]);
  return deficit;
}

int horizon_adapt(const Surrogate& s, Rng& rng) {
  if (s.n() == 0) return 0;
  const Eigen::VectorXi deficit = allocation_deficits(s);
  std::uniform_int_distribution<int> pick(0, s.n() - 1);
  return deficit[pick(rng)];
}

}  // namespace hetdoe
