#pragma once

// Replicate-or-explore decisions by rollout over future replicates, and the
// horizon controllers that steer the rollout length.

#include "hetdoe/imspe.hpp"
#include "hetdoe/sampling.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace hetdoe {

enum class HorizonMode { Fixed, Target, Adapt };

std::string_view to_string(HorizonMode mode);
HorizonMode horizon_mode_from_string(std::string_view name);

struct LookaheadConfig {
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;  // paths evaluated concurrently when > 1
  int starts = 0;   // continuous multistart count, 0 = max(5, 2d)
  int max_iterations = 100;
};

enum class Action { Replicate, Explore };

struct PathStep {
  Action action = Action::Replicate;
  int k = -1;  // replicate index (the explored location gets index n)
  Vec x;
};

struct DecisionPath {
  std::vector<PathStep> steps;
  double terminal = 0.0;  // I at design size N + 1 + h
};

struct DesignDecision {
  Action action = Action::Explore;
  int k = -1;
  Vec x;
  double value = 0.0;
  int horizon = 0;
  std::vector<DecisionPath> paths;  // empty for h <= 0
  int discrete_searches = 0;
};

// Evaluates the h + 1 rollout paths on the frozen state and noise field.
// h = 0 is a single optimize_next with the epsilon rules; h = -1 the same
// without them.
DesignDecision choose_next(const Surrogate& s, const NoiseFunction& noise, int h, const LookaheadConfig& cfg);

// Raise the horizon after an exploration while n/N > rho, lower it (not below
// -1) after a replication while n/N < rho.
int horizon_target(int h, int n, long N, double rho, Action last_action);

// Continuous replicate allocation a_i* proportional to sqrt(r_i K_i) with
// K_i = (K^{-1} W K^{-1})_{ii}, summing to N_total.
Vec sk_allocation(const Surrogate& s, const VecRef& noise, double N_total);

// Replicate deficits max(0, round(a_i*) - a_i) with a* from sk_allocation at
// the current N (ties in rounding go to even).
Eigen::VectorXi allocation_deficits(const Surrogate& s);
// Uniform draw among the deficits.
int horizon_adapt(const Surrogate& s, Rng& rng);

}  // namespace hetdoe
