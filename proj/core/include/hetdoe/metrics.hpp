#pragma once

#include "hetdoe/kernel.hpp"

namespace hetdoe {

double rmse(const VecRef& pred, const VecRef& truth);
// RMSE between log variances; both inputs floored at 1e-12.
double log_noise_rmse(const VecRef& pred_r, const VecRef& truth_r);
// Mean of -(y - mu)^2 / sigma2 - log sigma2. Higher is better.
double proper_score(const VecRef& mu, const VecRef& sigma2, const VecRef& y);
// Expectation of the score when y ~ N(true_mean, true_var) at each point.
double expected_score(const VecRef& mu, const VecRef& sigma2, const VecRef& true_mean, const VecRef& true_var);

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (sum of ranks of positive differences)
  double z = 0.0;
  double p_value = 1.0;
  int n = 0;               // non-zero differences
};
// Matched-pairs signed-rank test of H1: x tends to be smaller than y, using
// the normal approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_less(const VecRef& x, const VecRef& y);

double median(Vec v);

}  // namespace hetdoe
