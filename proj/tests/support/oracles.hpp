#pragma once

// Independent reference computations for the tests: adaptive quadrature of
// kernel products, central differences, and dense full-N GP algebra that
// never touches the unique-n machinery.

#include "hetdoe/design.hpp"
#include "hetdoe/kernel.hpp"
#include "hetdoe/sampling.hpp"

#include <Eigen/Cholesky>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using hetdoe::KernelFamily;
using hetdoe::Mat;
using hetdoe::Vec;

// \int_0^1 c(xi, x) c(xj, x) dx, split at the kinks of the Matern families.
inline double w_quadrature(KernelFamily f, double theta, double xi, double xj) {
  auto integrand = [&](double x) {
    return hetdoe::kernel1d::correlation(f, theta, xi, x) * hetdoe::kernel1d::correlation(f, theta, xj, x);
  };
  double cuts[4] = {0.0, std::min(xi, xj), std::max(xi, xj), 1.0};
  double total = 0.0;
  for (int s = 0; s < 3; ++s) {
    if (cuts[s + 1] - cuts[s] <= 0.0) continue;
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, cuts[s], cuts[s + 1], 15,
                                                                           1e-11, &err);
  }
  return total;
}

// Central difference of a scalar function of a vector.
inline Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline double relative_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Dense GP on all N observations with per-observation noise variances.
struct FullGP {
  hetdoe::KernelSpec kernel;
  Mat X;
  Vec y;
  Vec noise;  // one entry per observation
  double offset = 0.0;

  struct Out {
    double mean, sigma2;
  };

  Out predict(const Vec& x, double r_x) const {
    const Mat K = kernel.nu * hetdoe::correlation_matrix(kernel, X) + Mat(noise.asDiagonal());
    const Vec k = kernel.nu * hetdoe::correlation_vector(kernel, x, X);
    Eigen::LLT<Mat> llt(K);
    const Vec alpha = llt.solve((y.array() - offset).matrix());
    const Vec u = llt.solve(k);
    return {offset + k.dot(alpha), kernel.nu - k.dot(u) + r_x};
  }
};

// Builds FullGP from a unique design and per-location noise r_i.
inline FullGP full_from_unique(const hetdoe::KernelSpec& kernel, const hetdoe::UniqueDesign& d, const Vec& r,
                               double offset = 0.0) {
  auto [X, Y] = hetdoe::expand(d);
  Vec noise(X.rows());
  Eigen::Index row = 0;
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < d.a[i]; ++j) noise[row++] = r[i];
  return {kernel, X, Y, noise, offset};
}

// IMSPE of a unique design from scratch: E - tr(K^{-1} W) with K formed and
// solved densely.
inline double imspe_dense(const hetdoe::KernelSpec& kernel, const Mat& X, const Vec& r_over_a) {
  const Mat K = kernel.nu * hetdoe::correlation_matrix(kernel, X) + Mat(r_over_a.asDiagonal());
  const Mat W = kernel.nu * kernel.nu * hetdoe::w_matrix(kernel, X);
  return kernel.nu - Eigen::LLT<Mat>(K).solve(W).trace();
}

// Monte Carlo IMSPE: average de-noised predictive variance at uniform points.
inline double imspe_monte_carlo(const hetdoe::KernelSpec& kernel, const Mat& X, const Vec& r_over_a, int draws,
                                std::uint64_t seed) {
  const Mat K = kernel.nu * hetdoe::correlation_matrix(kernel, X) + Mat(r_over_a.asDiagonal());
  Eigen::LLT<Mat> llt(K);
  hetdoe::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double acc = 0.0;
  Vec x(X.cols());
  for (int t = 0; t < draws; ++t) {
    for (Eigen::Index p = 0; p < x.size(); ++p) x[p] = u(rng);
    const Vec k = kernel.nu * hetdoe::correlation_vector(kernel, x, X);
    acc += kernel.nu - k.dot(llt.solve(k));
  }
  return acc / draws;
}

// A random replicated data set inside [0,1]^d.
inline hetdoe::UniqueDesign random_design(int n, int d, int max_reps, hetdoe::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> reps(1, max_reps);
  std::normal_distribution<double> z(0.0, 1.0);
  hetdoe::UniqueDesign out(d);
  const Mat X = hetdoe::latin_hypercube(n, d, rng);
  for (int i = 0; i < n; ++i) {
    const int a = reps(rng);
    const double level = std::sin(6.0 * X(i, 0)) + (d > 1 ? X(i, 1) : 0.0);
    int k = out.append(X.row(i).transpose(), level + 0.3 * z(rng));
    for (int j = 1; j < a; ++j) out.add_to(k, level + 0.3 * z(rng));
  }
  return out;
}

inline KernelFamily family_at(int i) {
  constexpr KernelFamily all[4] = {KernelFamily::Gaussian, KernelFamily::Matern52, KernelFamily::Matern32,
                                   KernelFamily::Matern12};
  return all[i % 4];
}

}  // namespace oracle
