#pragma once

// Bound-constrained limited-memory quasi-Newton minimization.
//
// Projected L-BFGS: variables sitting on a bound with the gradient pushing
// outward are frozen for the step, the two-loop recursion runs on the free
// subspace, and an Armijo backtracking search follows the projected path.

#include "hetdoe/kernel.hpp"

#include <functional>

namespace hetdoe {

// Returns f(x) and writes the gradient into grad (already sized).
using Objective = std::function<double(const Vec& x, Vec& grad)>;

struct BoxOptions {
  int max_iterations = 200;
  int max_evaluations = 1000;
  int memory = 7;
  double pg_tolerance = 1e-8;   // sup-norm of the projected gradient
  double f_tolerance = 1e-12;   // relative decrease between iterations
};

struct BoxResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

BoxResult minimize_box(const Objective& objective, Vec x0, const Vec& lower, const Vec& upper,
                       const BoxOptions& options = {});

}  // namespace hetdoe
