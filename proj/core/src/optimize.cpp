#include "hetdoe/optimize.hpp"

#include <cmath>
#include <deque>
#include <algorithm>
#include <limits>
#include <vector>
#include <stdexcept>

namespace hetdoe {

namespace {

Vec project(const Vec& x, const Vec& lower, const Vec& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Coordinates that are pinned to a bound with the gradient pointing outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Vec& x, const Vec& g, const Vec& lower,
                                                 const Vec& upper) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double span = 1e-12 * std::max(1.0, upper[i] - lower[i]);
    active[i] = (x[i] <= lower[i] + span && g[i] > 0.0) || (x[i] >= upper[i] - span && g[i] < 0.0);
  }
  return active;
}

double projected_gradient_norm(const Vec& x, const Vec& g, const Vec& lower, const Vec& upper) {
  return (project(x - g, lower, upper) - x).cwiseAbs().maxCoeff();
}

}  // namespace

BoxResult minimize_box(const Objective& objective, Vec x0, const Vec& lower, const Vec& upper,
                       const BoxOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("minimize_box: bound size mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("minimize_box: lower > upper");

  BoxResult result;
  Vec x = project(x0, lower, upper);
  Vec g(n);
  double f = objective(x, g);
  result.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    result.x = x;
    result.value = f;
    return result;
  }

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    if (projected_gradient_norm(x, g, lower, upper) <= options.pg_tolerance) {
      result.converged = true;
      break;
    }

    const auto active = active_set(x, g, lower, upper);
    Vec q = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[i]) q[i] = 0.0;

    // Two-loop recursion restricted to the free variables.
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t j = m; j-- > 0;) {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[i]) sq += s_hist[j][i] * q[i];
      alpha[j] = rho_hist[j] * sq;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[i]) q[i] -= alpha[j] * y_hist[j][i];
    }
    if (m > 0) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    } else {
      const double gn = q.cwiseAbs().maxCoeff();
      if (gn > 0.0) q *= std::min(1.0, 0.1 / gn);
    }
    for (std::size_t j = 0; j < m; ++j) {
      double yq = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[i]) yq += y_hist[j][i] * q[i];
      const double beta = rho_hist[j] * yq;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!active[i]) q[i] += s_hist[j][i] * (alpha[j] - beta);
    }
    Vec dir = -q;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[i]) dir[i] = 0.0;

    if (!(g.dot(dir) < 0.0)) {
      // Not a descent direction: reset memory and fall back to steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      for (Eigen::Index i = 0; i < n; ++i)
        if (active[i]) dir[i] = 0.0;
      const double dn = dir.cwiseAbs().maxCoeff();
      if (dn > 0.0) dir *= std::min(1.0, 0.1 / dn);
    }

    // Projected backtracking line search with the Armijo condition.
    double step = 1.0;
    Vec x_new(n), g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 30 && result.evaluations < options.max_evaluations; ++ls) {
      x_new = project(x + step * dir, lower, upper);
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * std::max(1.0, y.squaredNorm())) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    result.iterations = iter + 1;
    if (decrease <= options.f_tolerance * std::max({1.0, std::abs(f)})) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;
  }
  if (!result.converged && projected_gradient_norm(x, g, lower, upper) <= options.pg_tolerance)
    result.converged = true;

  result.x = x;
  result.value = f;
  return result;
}

}  // namespace hetdoe
