#pragma once

// Zero-mean GP regression in the unique-n representation.
//
// With k = nu * c and per-observation noise variance r_i at location i, the
// unique-n covariance is K = (k(x_i, x_j) + delta_ij r_i / a_i). The state keeps
// K^{-1} explicitly together with W = (nu^2 w(x_i, x_j)), so that both the
// sequential updates and the IMSPE quantities are O(n^2).

#include "hetdoe/design.hpp"
#include "hetdoe/kernel.hpp"

#include <optional>

namespace hetdoe {

struct Prediction {
  double mean = 0.0;
  double sigma2 = 0.0;           // includes the noise r(x) passed to predict
  double sigma2_denoised = 0.0;  // sigma2 - r(x)
};

class Surrogate {
 public:
  // Incremental updates between full re-inversions.
  static constexpr int kRebuildEvery = 25;

  Surrogate() = default;
  // Builds K, K^{-1} and W from scratch. `noise` holds r(x_i) per location.
  // `mean_offset` is a constant prior mean subtracted from responses.
  Surrogate(KernelSpec kernel, UniqueDesign design, Vec noise, double mean_offset = 0.0);

  const KernelSpec& kernel() const { return kernel_; }
  const UniqueDesign& design() const { return design_; }
  const Vec& noise() const { return noise_; }
  const Mat& Kinv() const { return kinv_; }
  const Mat& W() const { return w_; }
  double E() const { return e_constant(kernel_); }
  double mean_offset() const { return offset_; }
  int n() const { return design_.n(); }
  int dim() const { return kernel_.dim(); }
  // Cached tr(K^{-1} W), maintained through the updates.
  double trace_KinvW() const { return trace_; }
  // Jitter added to the diagonal of K at the last full inversion.
  double jitter() const { return jitter_; }

  // k_n(x) = nu * c(x, x_i).
  Vec cov_vector(const VecRef& x) const;
  // Unique-n covariance matrix K.
  Mat K() const;

  // Predictive mean and variance at x; r_x is the noise level at x.
  Prediction predict(const VecRef& x, double r_x = 0.0) const;

  // Adds a new distinct location via the partitioned inverse. When y is absent
  // the location is hypothetical and its mean is set to the current prediction.
  Surrogate extend_new_location(const VecRef& x, double r, std::optional<double> y = {}) const;
  // Adds one replicate at location k via Sherman-Morrison. A hypothetical
  // replicate (no y) leaves ybar_k unchanged.
  Surrogate add_replicate(int k, std::optional<double> y = {}) const;

  // Full re-inversion from the current design and noise.
  void rebuild();

 private:
  void refresh_alpha();

  KernelSpec kernel_;
  UniqueDesign design_;
  Vec noise_;
  double offset_ = 0.0;
  Mat kinv_;
  Mat w_;
  Vec alpha_;  // K^{-1} (ybar - offset)
  double trace_ = 0.0;
  double jitter_ = 0.0;
  int updates_since_rebuild_ = 0;
};

// Dense inverse of a symmetric positive definite matrix with jitter escalation
// (1e-8 scale, x10 twice). Returns the jitter that was needed.
double spd_inverse(const MatRef& A, Mat& inverse, double scale);

}  // namespace hetdoe
