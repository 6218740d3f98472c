#pragma once

// Integrated mean-squared prediction error of the de-noised predictor over the
// unit cube, and the one-step-ahead versions used for sequential design.
//
//   I_N          = E - tr(K^{-1} W)
//   I_{N+1}(x)   = I_N - (u'Wu - 2 w'u + w(x,x)) / sigma_n^2(x),  u = K^{-1} k_n(x)
//   I_{N+1}(x_k) = I_N - tr(B_k W)                               (one more replicate at x_k)

#include "hetdoe/hetgp.hpp"
#include "hetdoe/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace hetdoe {

// Noise level r and its gradient at any x. Only .r and .dr are read.
using NoiseFunction = std::function<NoisePrediction(const VecRef&)>;

// Constant noise level with zero gradient.
NoiseFunction constant_noise(double r, int dim);

double imspe_full(const Surrogate& s);

// I_{N+1} for a new location x with noise r. Throws std::runtime_error when
// the predictive variance at x stays non-positive after jitter.
double imspe_next(const Surrogate& s, const VecRef& x, double r);
// Same value, with the gradient in x; dr is the gradient of r(x).
double imspe_next_grad(const Surrogate& s, const VecRef& x, double r, const VecRef& dr, Vec& grad);
inline Vec imspe_grad(const Surrogate& s, const VecRef& x, double r, const VecRef& dr) {
  Vec g;
  imspe_next_grad(s, x, r, dr, g);
  return g;
}

// tr(B_k W): the IMSPE reduction from one more replicate at location k.
double replicate_gain(const Surrogate& s, int k);
double imspe_replicate(const Surrogate& s, int k);
// I_{N+1}(x_k) for all k in O(n^2) total after one O(n^3) product.
Vec imspe_replicate_all(const Surrogate& s);

struct ReplicationCheck {
  bool replicate_preferred = false;
  double threshold = 0.0;  // replicate iff r(x) >= threshold
  int k_star = -1;
};

// Whether one more replicate at the best existing location beats a new
// observation at x with noise r.
ReplicationCheck replication_condition(const Surrogate& s, const VecRef& x, double r);

struct SearchOptions {
  double epsilon = 1e-6;
  bool replicate_ties = true;  // false reproduces the h = -1 behavior
  int starts = 0;              // 0 means max(5, 2d)
  int max_iterations = 100;
  std::uint64_t seed = 0;
};

struct NextPoint {
  Vec x;                  // chosen location (x_k for a replicate)
  double value = 0.0;     // I_{N+1} at the choice
  bool is_replicate = false;
  int k = -1;
  double continuous_value = 0.0;
  double discrete_value = 0.0;
};

// Multistart continuous search of I_{N+1} over [0,1]^d.
NextPoint optimize_continuous(const Surrogate& s, const NoiseFunction& noise, const SearchOptions& opts);
// Continuous search plus the discrete scan over existing locations, with the
// epsilon rules deciding between them.
NextPoint optimize_next(const Surrogate& s, const NoiseFunction& noise, const SearchOptions& opts);

}  // namespace hetdoe
