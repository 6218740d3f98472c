#pragma once

// Heteroskedastic GP: a mean GP with covariance nu (C + A^{-1} Lambda) and a
// latent GP for log Lambda,
//
//     log Lambda = mu_g + C_g (C_g + g A^{-1})^{-1} (Delta - mu_g),
//
// fit by maximizing the joint likelihood with nu and nu_g concentrated out.
// mu_g is the GLS mean of Delta, or zero when latent_mean is off.
// Noise variances on the response scale are r_i = nu_hat * lambda_i.

#include "hetdoe/design.hpp"
#include "hetdoe/kernel.hpp"
#include "hetdoe/optimize.hpp"
#include "hetdoe/surrogate.hpp"

#include <cmath>
#include <cstdint>
#include <functional>

namespace hetdoe {

struct HetGPOptions {
  KernelFamily family = KernelFamily::Gaussian;
  KernelFamily noise_family = KernelFamily::Matern52;
  double theta_lower = 1e-3, theta_upper = 10.0;
  double theta_g_lower = 1e-2, theta_g_upper = 10.0;
  double g_lower = 1e-8, g_upper = 1.0;
  double delta_lower = std::log(1e-8), delta_upper = std::log(1e4);
  int multistarts = 3;
  int max_iterations = 150;       // per start, cold fits
  int warm_max_iterations = 40;   // warm-started refits
  int min_hetero_n = 5;           // below this a single noise level is fitted
  bool force_homoskedastic = false;
  bool latent_mean = true;  // GLS constant mean for Delta; zero when off
};

// Everything the likelihood is optimized over. In homoskedastic mode only
// theta and log_lambda are used.
struct HetGPParams {
  Vec theta;
  Vec theta_g;
  double g = 0.1;
  Vec delta;
  bool homoskedastic = false;
  double log_lambda = 0.0;
};

struct NoisePrediction {
  double mu_g = 0.0;   // predicted log lambda
  double var_g = 0.0;  // noise-GP predictive variance
  double r = 0.0;      // nu_hat * exp(mu_g)
  Vec dr;              // gradient of r with respect to x
};

struct LatentFusion {
  double delta = 0.0;   // fused latent
  double var = 0.0;     // its variance
  double delta_hat = 0.0;
  double var_hat = 0.0;
};

// Combines a noise-GP prediction N(mu_g, var_g) with the bias-corrected
// empirical log-variance of a_tilde observations whose uncorrected variance
// (already divided by nu_hat) is sigma2_hat. var_g == 0 returns mu_g.
LatentFusion fuse_latent(double mu_g, double var_g, int a_tilde, double sigma2_hat);

// Concentrated joint log-likelihood and its gradient with respect to the packed
// optimization vector (see HetGP::pack).
struct LikelihoodValue {
  double value = -INFINITY;
  double nu_hat = 0.0;
  double nu_hat_g = 0.0;
  double mean_g = 0.0;
  double mean_part = -INFINITY;  // value without the latent term
  bool ok = false;
};

class HetGPLikelihood {
 public:
  HetGPLikelihood(const UniqueDesign& design, double mean_offset, const HetGPOptions& options);

  // Evaluates log L at params; grad (if given) receives d log L / d packed.
  LikelihoodValue evaluate(const HetGPParams& params, Vec* grad = nullptr) const;

  Vec pack(const HetGPParams& params) const;
  HetGPParams unpack(const Vec& v, bool homoskedastic) const;
  void bounds(bool homoskedastic, Vec& lower, Vec& upper) const;

 private:
  const UniqueDesign& design_;
  double offset_;
  HetGPOptions options_;
  Vec yc_;  // ybar - offset
  Vec ainv_;
};

struct FitReport {
  double log_likelihood = -INFINITY;
  bool converged = false;
  int evaluations = 0;
  int starts = 0;
};

class HetGP {
 public:
  HetGP() = default;
  // Model at fixed parameters (no optimization).
  HetGP(UniqueDesign design, HetGPParams params, HetGPOptions options, double mean_offset);

  // Maximum likelihood fit. With `warm`, its parameters (resized to the
  // current n) seed a local search; `cold` additionally runs the multistart
  // and keeps the homoskedastic fit when the heteroskedastic one does not
  // improve the mean-GP part of the likelihood.
  static HetGP fit(const UniqueDesign& design, const HetGPOptions& options,
                   const HetGPParams* warm = nullptr, bool cold = true, FitReport* report = nullptr);

  const UniqueDesign& design() const { return surrogate_.design(); }
  const HetGPParams& params() const { return params_; }
  const HetGPOptions& options() const { return options_; }
  const Surrogate& surrogate() const { return surrogate_; }
  const Vec& lambda() const { return lambda_; }
  double nu_hat() const { return nu_hat_; }
  double nu_hat_g() const { return nu_hat_g_; }
  double latent_mean() const { return mean_g_; }
  double mean_offset() const { return offset_; }
  double log_likelihood() const { return loglik_; }
  bool homoskedastic() const { return params_.homoskedastic; }
  KernelSpec mean_kernel() const { return surrogate_.kernel(); }
  KernelSpec noise_kernel() const;

  // Mean and variance for a new observation at x (noise included in sigma2).
  Prediction predict(const VecRef& x) const;
  NoisePrediction predict_noise(const VecRef& x) const;
  // At an existing location the variance is the leave-one-out (downdated) one.
  NoisePrediction predict_noise_at(int k) const;

  // Fused latent for location k from all of its observations, centered on the
  // current predictive mean there.
  LatentFusion fuse_at(const UniqueDesign& updated, int k) const;

  // A copy of the small state needed to evaluate the noise field at any x.
  // Fills mu_g, r and dr only; var_g stays 0 (predict_noise has it).
  std::function<NoisePrediction(const VecRef&)> noise_function() const;

 private:
  HetGPParams params_;
  HetGPOptions options_;
  double offset_ = 0.0;
  Vec lambda_;
  double nu_hat_ = 1.0;
  double nu_hat_g_ = 0.0;
  double loglik_ = -INFINITY;
  Mat m_inv_;   // (C_g + g A^{-1})^{-1}
  Vec beta_;    // m_inv_ * (delta - mean_g_)
  double mean_g_ = 0.0;
  Surrogate surrogate_;
};

// Weighted mean of all responses, used to center the zero-mean GP.
double response_mean(const UniqueDesign& design);

// Resizes params.delta to n, filling new entries with `fill`.
HetGPParams extend_params(HetGPParams params, int n, double fill);

}  // namespace hetdoe
