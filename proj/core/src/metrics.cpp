#include "hetdoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hetdoe {

namespace {

void check_sizes(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": size mismatch");
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

double rmse(const VecRef& pred, const VecRef& truth) {
  check_sizes(pred.size(), truth.size(), "rmse");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double log_noise_rmse(const VecRef& pred_r, const VecRef& truth_r) {
  check_sizes(pred_r.size(), truth_r.size(), "log_noise_rmse");
  const Vec lp = pred_r.cwiseMax(1e-12).array().log().matrix();
  const Vec lt = truth_r.cwiseMax(1e-12).array().log().matrix();
  return rmse(lp, lt);
}

double proper_score(const VecRef& mu, const VecRef& sigma2, const VecRef& y) {
  check_sizes(mu.size(), y.size(), "proper_score");
  check_sizes(sigma2.size(), y.size(), "proper_score");
  if ((sigma2.array() <= 0.0).any()) throw std::invalid_argument("proper_score: non-positive variance");
  const Eigen::ArrayXd e = (y - mu).array();
  return (-(e * e) / sigma2.array() - sigma2.array().log()).mean();
}

double expected_score(const VecRef& mu, const VecRef& sigma2, const VecRef& true_mean, const VecRef& true_var) {
  check_sizes(mu.size(), true_mean.size(), "expected_score");
  check_sizes(sigma2.size(), true_var.size(), "expected_score");
  if ((sigma2.array() <= 0.0).any()) throw std::invalid_argument("expected_score: non-positive variance");
  const Eigen::ArrayXd e = (true_mean - mu).array();
  return (-(e * e + true_var.array()) / sigma2.array() - sigma2.array().log()).mean();
}

WilcoxonResult wilcoxon_less(const VecRef& x, const VecRef& y) {
  check_sizes(x.size(), y.size(), "wilcoxon_less");
  std::vector<double> d;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  WilcoxonResult out;
  out.n = static_cast<int>(d.size());
  if (out.n == 0) return out;

  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(d.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    const double ties = static_cast<double>(j - i + 1);
    tie_term += ties * ties * ties - ties;
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0.0) out.statistic += rank[i];

  const double n = out.n;
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return out;
  // Small W+ supports x < y; continuity correction toward the mean.
  out.z = (out.statistic - mean + 0.5) / std::sqrt(var);
  out.p_value = 0.5 * std::erfc(-out.z / std::sqrt(2.0));
  return out;
}

double median(Vec v) {
  if (v.size() == 0) throw std::invalid_argument("median: empty input");
  std::sort(v.data(), v.data() + v.size());
  const Eigen::Index n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace hetdoe
