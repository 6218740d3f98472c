#include "hetdoe/imspe.hpp"

#include "hetdoe/optimize.hpp"
#include "hetdoe/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hetdoe {

namespace {

struct NextTerms {
  Vec k, u, w;
  double wxx = 0.0;
  double sigma2 = 0.0;
  double q = 0.0;
};

NextTerms next_terms(const Surrogate& s, const VecRef& x, double r) {
  if (x.size() != s.dim()) throw std::invalid_argument("imspe: dimension mismatch");
  NextTerms t;
  const double nu = s.kernel().nu;
  const double nu2 = nu * nu;
  t.wxx = nu2 * w_integral(s.kernel(), x, x);
  if (s.n() == 0) {
    t.sigma2 = nu + r;
    t.q = t.wxx;
    return t;
  }
  t.k = s.cov_vector(x);
  t.u = s.Kinv() * t.k;
  const double base = nu - t.k.dot(t.u);
  t.sigma2 = base + r;
  double bump = 1e-8 * nu;
  for (int attempt = 0; attempt < 3 && !(t.sigma2 > 0.0); ++attempt) {
    t.sigma2 = base + r + bump;
    bump *= 10.0;
  }
  if (!(t.sigma2 > 0.0)) throw std::runtime_error("imspe_next: non-positive predictive variance");
  t.w = nu2 * w_vector(s.kernel(), x, s.design().x);
  t.q = t.u.dot(s.W() * t.u) - 2.0 * t.w.dot(t.u) + t.wxx;
  return t;
}

}  // namespace

NoiseFunction constant_noise(double r, int dim) {
  return [r, dim](const VecRef&) {
    NoisePrediction p;
    p.r = r;
    p.mu_g = r > 0.0 ? std::log(r) : -INFINITY;
    p.dr = Vec::Zero(dim);
    return p;
  };
}

double imspe_full(const Surrogate& s) { return s.E() - s.trace_KinvW(); }

double imspe_next(const Surrogate& s, const VecRef& x, double r) {
  const NextTerms t = next_terms(s, x, r);
  return imspe_full(s) - t.q / t.sigma2;
}

double imspe_next_grad(const Surrogate& s, const VecRef& x, double r, const VecRef& dr, Vec& grad) {
  const NextTerms t = next_terms(s, x, r);
  const int d = s.dim();
  const double nu = s.kernel().nu;
  const double nu2 = nu * nu;
  grad.resize(d);
  const Vec c2 = nu2 * w_self_grad(s.kernel(), x);
  if (s.n() == 0) {
    for (int p = 0; p < d; ++p) grad[p] = -(c2[p] * t.sigma2 - t.q * dr[p]) / (t.sigma2 * t.sigma2);
    return imspe_full(s) - t.q / t.sigma2;
  }
  Mat D, C1;
  cross_gradients(s.kernel(), x, s.design().x, D, &C1);
  D *= nu;
  C1 *= nu2;
  const Vec z = s.Kinv() * (s.W() * t.u - t.w);
  for (int p = 0; p < d; ++p) {
    const double dsigma2 = dr[p] - 2.0 * D.col(p).dot(t.u);
    const double dq = 2.0 * D.col(p).dot(z) - 2.0 * C1.col(p).dot(t.u) + c2[p];
    grad[p] = -(dq * t.sigma2 - t.q * dsigma2) / (t.sigma2 * t.sigma2);
  }
  return imspe_full(s) - t.q / t.sigma2;
}

double replicate_gain(const Surrogate& s, int k) {
  if (k < 0 || k >= s.n()) throw std::out_of_range("replicate_gain: index out of range");
  const double r = s.noise()[k];
  if (r <= 0.0) return 0.0;
  const double a = s.design().a[k];
  const double denom = a * (a + 1.0) / r - s.Kinv()(k, k);
  const Vec col = s.Kinv().col(k);
  return col.dot(s.W() * col) / denom;
}

double imspe_replicate(const Surrogate& s, int k) { return imspe_full(s) - replicate_gain(s, k); }

Vec imspe_replicate_all(const Surrogate& s) {
  const int n = s.n();
  Vec out(n);
  if (n == 0) return out;
  // diag(K^{-1} W K^{-1}) via one product.
  const Mat P = s.Kinv() * s.W();
  const double base = imspe_full(s);
  for (int k = 0; k < n; ++k) {
    const double r = s.noise()[k];
    if (r <= 0.0) {
      out[k] = base;
      continue;
    }
    const double a = s.design().a[k];
    const double denom = a * (a + 1.0) / r - s.Kinv()(k, k);
    out[k] = base - P.row(k).dot(s.Kinv().col(k)) / denom;
  }
  return out;
}

ReplicationCheck replication_condition(const Surrogate& s, const VecRef& x, double r) {
  ReplicationCheck out;
  if (s.n() == 0) return out;
  const Vec all = imspe_replicate_all(s);
  all.minCoeff(&out.k_star);
  const double gain = imspe_full(s) - all[out.k_star];
  const NextTerms t = next_terms(s, x, r);
  const double denoised = t.sigma2 - r;
  if (gain > 0.0) {
    out.threshold = t.q / gain - denoised;
    out.replicate_preferred = r >= out.threshold;
  } else {
    out.threshold = std::numeric_limits<double>::infinity();
    out.replicate_preferred = t.q <= 0.0;
  }
  return out;
}

NextPoint optimize_continuous(const Surrogate& s, const NoiseFunction& noise, const SearchOptions& opts) {
  const int d = s.dim();
  const int starts = opts.starts > 0 ? opts.starts : std::max(5, 2 * d);
  Rng rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, 0.02);

  Mat X0(starts, d);
  int filled = 0;
  if (s.n() > 0) {
    int kbest = 0;
    imspe_replicate_all(s).minCoeff(&kbest);
    for (int p = 0; p < d; ++p) X0(0, p) = std::clamp(s.design().x(kbest, p) + jitter(rng), 0.0, 1.0);
    filled = 1;
  }
  if (filled < starts) X0.bottomRows(starts - filled) = latin_hypercube(starts - filled, d, rng);

  const Vec lower = Vec::Zero(d), upper = Vec::Ones(d);
  Objective objective = [&](const Vec& x, Vec& g) {
    const NoisePrediction np = noise(x);
    try {
      return imspe_next_grad(s, x, np.r, np.dr, g);
    } catch (const std::runtime_error&) {
      g.setZero();
      return std::numeric_limits<double>::infinity();
    }
  };
  BoxOptions bo;
  bo.max_iterations = opts.max_iterations;
  bo.max_evaluations = 5 * opts.max_iterations;
  bo.pg_tolerance = 1e-9;
  bo.f_tolerance = 1e-13;

  NextPoint best;
  best.value = std::numeric_limits<double>::infinity();
  for (int st = 0; st < starts; ++st) {
    const BoxResult r = minimize_box(objective, X0.row(st).transpose(), lower, upper, bo);
    if (std::isfinite(r.value) && r.value < best.value) {
      best.value = r.value;
      best.x = r.x;
    }
  }
  best.continuous_value = best.value;
  return best;
}

NextPoint optimize_next(const Surrogate& s, const NoiseFunction& noise, const SearchOptions& opts) {
  NextPoint cont = optimize_continuous(s, noise, opts);
  NextPoint out = cont;
  out.discrete_value = std::numeric_limits<double>::infinity();
  int kd = -1;
  if (s.n() > 0) {
    const Vec all = imspe_replicate_all(s);
    out.discrete_value = all.minCoeff(&kd);
  }

  const auto as_replicate = [&](int k, double value) {
    out.is_replicate = true;
    out.k = k;
    out.x = s.design().x.row(k).transpose();
    out.value = value;
  };

  if (!std::isfinite(cont.value)) {
    if (kd < 0) throw std::runtime_error("optimize_next: no finite candidate");
    as_replicate(kd, out.discrete_value);
    return out;
  }

  // A continuous winner on top of an existing location is that location.
  const double coincide_tol = opts.replicate_ties ? opts.epsilon : kDuplicateTol;
  const int near = s.n() > 0 ? s.design().find(cont.x, coincide_tol) : -1;

  if (opts.replicate_ties && kd >= 0 &&
      out.discrete_value <= cont.value + opts.epsilon * std::abs(cont.value)) {
    as_replicate(kd, out.discrete_value);
  } else if (near >= 0) {
    as_replicate(near, imspe_replicate(s, near));
  }
  return out;
}

}  // namespace hetdoe
