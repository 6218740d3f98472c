#include "hetdoe/hetgp.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hetdoe {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kMinNuG = 1e-10;

struct Factor {
  Mat inverse;
  double logdet = 0.0;
  bool ok = false;
};

Factor factor(const Mat& A) {
  Factor f;
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) return f;
  const Vec diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) return f;
  f.logdet = 2.0 * diag.array().log().sum();
  f.inverse = llt.solve(Mat::Identity(A.rows(), A.cols()));
  f.ok = f.inverse.allFinite() && std::isfinite(f.logdet);
  return f;
}

// Per-dimension correlation matrices and their theta derivatives; the full
// correlation is the elementwise product across dimensions.
struct SeparableCorrelation {
  Mat C;
  std::vector<Mat> dC;  // d C / d theta_p

  SeparableCorrelation(KernelFamily family, const Vec& theta, const Mat& X, bool derivatives) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    std::vector<Mat> parts(d, Mat(n, n));
    std::vector<Mat> dparts;
    if (derivatives) dparts.assign(d, Mat(n, n));
    for (int p = 0; p < d; ++p)
      for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
          const double v = kernel1d::correlation(family, theta[p], X(i, p), X(j, p));
          parts[p](i, j) = parts[p](j, i) = v;
          if (derivatives) {
            const double dv = kernel1d::correlation_dtheta(family, theta[p], X(i, p), X(j, p));
            dparts[p](i, j) = dparts[p](j, i) = dv;
          }
        }
    C = Mat::Ones(n, n);
    for (int p = 0; p < d; ++p) C.array() *= parts[p].array();
    if (derivatives) {
      dC.resize(d);
      for (int p = 0; p < d; ++p) {
        dC[p] = dparts[p];
        for (int q = 0; q < d; ++q)
          if (q != p) dC[p].array() *= parts[q].array();
      }
    }
  }
};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

struct NoiseState {
  KernelSpec kernel;  // noise kernel, nu = 1
  Mat X;
  Vec beta;
  double mean_g = 0.0;
  Mat m_inv;
  double nu_hat = 1.0;
  double nu_hat_g = 0.0;
  bool homoskedastic = false;
  bool with_variance = true;
  double log_lambda = 0.0;

  NoisePrediction operator()(const VecRef& x) const {
    NoisePrediction out;
    out.dr = Vec::Zero(x.size());
    if (homoskedastic) {
      out.mu_g = log_lambda;
      out.r = nu_hat * std::exp(log_lambda);
      return out;
    }
    const Vec c = correlation_vector(kernel, x, X);
    out.mu_g = mean_g + c.dot(beta);
    if (with_variance) out.var_g = std::max(0.0, nu_hat_g * (1.0 - c.dot(m_inv * c)));
    out.r = nu_hat * std::exp(out.mu_g);
    Mat dc;
    cross_gradients(kernel, x, X, dc);
    out.dr = dc.transpose() * beta;
    out.dr *= out.r;
    return out;
  }
};

}  // namespace

LatentFusion fuse_latent(double mu_g, double var_g, int a_tilde, double sigma2_hat) {
  if (a_tilde < 1) throw std::invalid_argument("fuse_latent: need at least one observation");
  if (var_g < 0.0) throw std::invalid_argument("fuse_latent: negative variance");
  LatentFusion out;
  const double half = 0.5 * a_tilde;
  out.delta_hat = std::log(sigma2_hat) - boost::math::digamma(half) - std::numbers::ln2 + std::log(double(a_tilde));
  out.var_hat = boost::math::trigamma(half);
  if (var_g == 0.0) {
    out.delta = mu_g;
    out.var = 0.0;
    return out;
  }
  const double precision = 1.0 / var_g + 1.0 / out.var_hat;
  out.var = 1.0 / precision;
  out.delta = (mu_g / var_g + out.delta_hat / out.var_hat) * out.var;
  return out;
}

double response_mean(const UniqueDesign& design) {
  if (design.n() == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < design.n(); ++i) sum += design.a[i] * design.ybar[i];
  return sum / static_cast<double>(design.total());
}

HetGPParams extend_params(HetGPParams params, int n, double fill) {
  const Eigen::Index old = params.delta.size();
  params.delta.conservativeResize(n);
  for (Eigen::Index i = old; i < n; ++i) params.delta[i] = fill;
  return params;
}

HetGPLikelihood::HetGPLikelihood(const UniqueDesign& design, double mean_offset, const HetGPOptions& options)
    : design_(design), offset_(mean_offset), options_(options) {
  yc_ = (design_.ybar.array() - offset_).matrix();
  ainv_ = design_.a.cast<double>().cwiseInverse();
}

Vec HetGPLikelihood::pack(const HetGPParams& p) const {
  const int d = design_.dim();
  const int n = design_.n();
  if (p.homoskedastic) {
    Vec v(d + 1);
    v.head(d) = p.theta.array().log().matrix();
    v[d] = p.log_lambda;
    return v;
  }
  Vec v(2 * d + 1 + n);
  v.head(d) = p.theta.array().log().matrix();
  v.segment(d, d) = p.theta_g.array().log().matrix();
  v[2 * d] = std::log(p.g);
  v.tail(n) = p.delta;
  return v;
}

HetGPParams HetGPLikelihood::unpack(const Vec& v, bool homoskedastic) const {
  const int d = design_.dim();
  const int n = design_.n();
  HetGPParams p;
  p.homoskedastic = homoskedastic;
  p.theta = v.head(d).array().exp().matrix();
  if (homoskedastic) {
    p.log_lambda = v[d];
    return p;
  }
  p.theta_g = v.segment(d, d).array().exp().matrix();
  p.g = std::exp(v[2 * d]);
  p.delta = v.tail(n);
  return p;
}

void HetGPLikelihood::bounds(bool homoskedastic, Vec& lower, Vec& upper) const {
  const int d = design_.dim();
  const int n = design_.n();
  const int size = homoskedastic ? d + 1 : 2 * d + 1 + n;
  lower.resize(size);
  upper.resize(size);
  lower.head(d).setConstant(std::log(options_.theta_lower));
  upper.head(d).setConstant(std::log(options_.theta_upper));
  if (homoskedastic) {
    lower[d] = options_.delta_lower;
    upper[d] = options_.delta_upper;
    return;
  }
  lower.segment(d, d).setConstant(std::log(options_.theta_g_lower));
  upper.segment(d, d).setConstant(std::log(options_.theta_g_upper));
  lower[2 * d] = std::log(options_.g_lower);
  upper[2 * d] = std::log(options_.g_upper);
  lower.tail(n).setConstant(options_.delta_lower);
  upper.tail(n).setConstant(options_.delta_upper);
}

LikelihoodValue HetGPLikelihood::evaluate(const HetGPParams& p, Vec* grad) const {
  LikelihoodValue out;
  const int n = design_.n();
  const int d = design_.dim();
  const double N = static_cast<double>(design_.total());
  const Vec a = design_.a.cast<double>();

  // Noise GP: log lambda = mu + C_g M^{-1} (Delta - mu), where mu is the GLS
  // mean of Delta (zero without latent_mean).
  Vec lambda(n);
  Factor mf;
  Vec beta, m1;
  double qg = 0.0, s1 = 0.0;
  std::unique_ptr<SeparableCorrelation> cg;
  if (p.homoskedastic) {
    lambda.setConstant(std::exp(p.log_lambda));
  } else {
    if (p.delta.size() != n) throw std::invalid_argument("HetGPLikelihood: latent vector size mismatch");
    cg = std::make_unique<SeparableCorrelation>(options_.noise_family, p.theta_g, design_.x, grad != nullptr);
    Mat M = cg->C;
    M.diagonal() += p.g * ainv_;
    mf = factor(M);
    if (!mf.ok) return out;
    beta = mf.inverse * p.delta;
    double mu = 0.0;
    if (options_.latent_mean) {
      m1 = mf.inverse.rowwise().sum();
      s1 = m1.sum();
      mu = m1.dot(p.delta) / s1;
      beta -= mu * m1;
    }
    qg = (p.delta.array() - mu).matrix().dot(beta);
    lambda = ((cg->C * beta).array() + mu).exp().matrix();
    out.mean_g = mu;
  }
  if (!lambda.allFinite() || (lambda.array() <= 0.0).any()) return out;

  // Mean GP: Upsilon = C + A^{-1} Lambda.
  const SeparableCorrelation cm(options_.family, p.theta, design_.x, grad != nullptr);
  Mat U = cm.C;
  U.diagonal() += lambda.cwiseProduct(ainv_);
  const Factor uf = factor(U);
  if (!uf.ok) return out;
  const Vec alpha = uf.inverse * yc_;
  const Vec s2a = a.cwiseProduct(design_.s2);
  const double psi = s2a.cwiseQuotient(lambda).sum() + yc_.dot(alpha);
  if (!(psi > 0.0)) return out;
  out.nu_hat = psi / N;

  double value = -0.5 * N * std::log(out.nu_hat) - 0.5 * uf.logdet - 0.5 * N * (1.0 + kLog2Pi);
  for (int i = 0; i < n; ++i) value -= 0.5 * ((a[i] - 1.0) * std::log(lambda[i]) + std::log(a[i]));
  out.mean_part = value;
  // The latent term is dropped for a flat latent field, where nu_hat_g -> 0
  // would make it unbounded.
  const bool floored = !p.homoskedastic && qg < n * kMinNuG;
  if (!p.homoskedastic) {
    out.nu_hat_g = std::max(qg / n, kMinNuG);
    if (!floored) value += -0.5 * n * std::log(out.nu_hat_g) - 0.5 * mf.logdet - 0.5 * n * (1.0 + kLog2Pi);
  }
  if (!std::isfinite(value)) return out;
  out.value = value;
  out.ok = true;

  if (grad) {
    const Vec packed = pack(p);
    grad->resize(packed.size());
    // d logL / d lambda_i, scaled by lambda_i (chain rule through log lambda).
    Vec gamma(n);
    for (int i = 0; i < n; ++i) {
      const double dpsi = -s2a[i] / (lambda[i] * lambda[i]) - alpha[i] * alpha[i] / a[i];
      const double dl = -0.5 * N / psi * dpsi - 0.5 * (a[i] - 1.0) / lambda[i] - 0.5 * uf.inverse(i, i) / a[i];
      gamma[i] = lambda[i] * dl;
    }
    for (int q = 0; q < d; ++q) {
      const Mat& D = cm.dC[q];
      const double quad = alpha.dot(D * alpha);
      const double tr = uf.inverse.cwiseProduct(D).sum();
      (*grad)[q] = p.theta[q] * (0.5 * N / psi * quad - 0.5 * tr);
    }
    if (p.homoskedastic) {
      (*grad)[d] = gamma.sum();
      return out;
    }
    const Mat& Minv = mf.inverse;
    const double pen = floored ? 0.0 : n / qg;
    // With log lambda = Delta - g A^{-1} beta, gamma pulls back through
    // t = M^{-1} u (projected off the mean direction), u = g A^{-1} gamma.
    const Vec u = p.g * gamma.cwiseProduct(ainv_);
    Vec t = Minv * u;
    if (options_.latent_mean) t -= (m1.dot(u) / s1) * m1;
    // Latents.
    grad->tail(n) = gamma - t - pen * beta;
    // Noise lengthscales.
    for (int q = 0; q < d; ++q) {
      const Mat& G = cg->dC[q];
      const Vec Gb = G * beta;
      const double own = floored ? 0.0 : 0.5 * pen * beta.dot(Gb) - 0.5 * Minv.cwiseProduct(G).sum();
      (*grad)[d + q] = p.theta_g[q] * (t.dot(Gb) + own);
    }
    // Nugget.
    const Vec ba = beta.cwiseProduct(ainv_);
    const double through_lambda = -gamma.dot(ba) + t.dot(ba);
    const double own = floored ? 0.0 : 0.5 * pen * beta.dot(ba) - 0.5 * Minv.diagonal().dot(ainv_);
    (*grad)[2 * d] = p.g * (through_lambda + own);
  }
  return out;
}

HetGP::HetGP(UniqueDesign design, HetGPParams params, HetGPOptions options, double mean_offset)
    : params_(std::move(params)), options_(options), offset_(mean_offset) {
  const int n = design.n();
  const int d = design.dim();
  if (n == 0) throw std::invalid_argument("HetGP: empty design");
  if (params_.theta.size() != d) throw std::invalid_argument("HetGP: theta dimension mismatch");
  const HetGPLikelihood lik(design, offset_, options_);
  const LikelihoodValue lv = lik.evaluate(params_);
  if (!lv.ok) throw std::runtime_error("HetGP: likelihood is not finite at the given parameters");
  loglik_ = lv.value;
  nu_hat_ = lv.nu_hat;
  nu_hat_g_ = lv.nu_hat_g;
  if (params_.homoskedastic) {
    lambda_ = Vec::Constant(n, std::exp(params_.log_lambda));
  } else {
    const KernelSpec gk(options_.noise_family, params_.theta_g, 1.0);
    const Mat Cg = correlation_matrix(gk, design.x);
    Mat M = Cg;
    M.diagonal() += params_.g * design.a.cast<double>().cwiseInverse();
    spd_inverse(M, m_inv_, 1.0);
    mean_g_ = lv.mean_g;
    beta_ = m_inv_ * (params_.delta.array() - mean_g_).matrix();
    lambda_ = ((Cg * beta_).array() + mean_g_).exp().matrix();
  }
  surrogate_ = Surrogate(KernelSpec(options_.family, params_.theta, nu_hat_), std::move(design),
                         nu_hat_ * lambda_, offset_);
}

KernelSpec HetGP::noise_kernel() const {
  if (params_.homoskedastic) return KernelSpec::isotropic(options_.noise_family, surrogate_.dim(), 1.0, 0.0);
  return KernelSpec(options_.noise_family, params_.theta_g, 1.0);
}

Prediction HetGP::predict(const VecRef& x) const {
  return surrogate_.predict(x, predict_noise(x).r);
}

std::function<NoisePrediction(const VecRef&)> HetGP::noise_function() const {
  auto state = std::make_shared<NoiseState>();
  state->homoskedastic = params_.homoskedastic;
  state->log_lambda = params_.log_lambda;
  state->nu_hat = nu_hat_;
  state->nu_hat_g = nu_hat_g_;
  if (!params_.homoskedastic) {
    state->kernel = KernelSpec(options_.noise_family, params_.theta_g, 1.0);
    state->X = surrogate_.design().x;
    state->beta = beta_;
    state->mean_g = mean_g_;
  }
  state->with_variance = false;
  return [state](const VecRef& x) { return (*state)(x); };
}

NoisePrediction HetGP::predict_noise(const VecRef& x) const {
  if (x.size() != surrogate_.dim()) throw std::invalid_argument("predict_noise: dimension mismatch");
  NoiseState state;
  state.homoskedastic = params_.homoskedastic;
  state.log_lambda = params_.log_lambda;
  state.nu_hat = nu_hat_;
  state.nu_hat_g = nu_hat_g_;
  if (params_.homoskedastic) return state(x);
  // Evaluate without copying the matrices.
  const KernelSpec gk(options_.noise_family, params_.theta_g, 1.0);
  const Mat& X = surrogate_.design().x;
  NoisePrediction out;
  const Vec c = correlation_vector(gk, x, X);
  out.mu_g = mean_g_ + c.dot(beta_);
  out.var_g = std::max(0.0, nu_hat_g_ * (1.0 - c.dot(m_inv_ * c)));
  out.r = nu_hat_ * std::exp(out.mu_g);
  Mat dc;
  cross_gradients(gk, x, X, dc);
  out.dr = out.r * (dc.transpose() * beta_);
  return out;
}

NoisePrediction HetGP::predict_noise_at(int k) const {
  if (k < 0 || k >= surrogate_.n()) throw std::out_of_range("predict_noise_at: index out of range");
  NoisePrediction out = predict_noise(surrogate_.design().x.row(k).transpose());
  if (!params_.homoskedastic) {
    out.mu_g = std::log(lambda_[k]);
    out.r = nu_hat_ * lambda_[k];
    out.var_g = nu_hat_g_ / m_inv_(k, k);
  }
  return out;
}

LatentFusion HetGP::fuse_at(const UniqueDesign& updated, int k) const {
  if (k < 0 || k >= updated.n()) throw std::out_of_range("fuse_at: index out of range");
  const Vec x = updated.x.row(k).transpose();
  const double mu = surrogate_.predict(x).mean;
  const NoisePrediction np = k < surrogate_.n() ? predict_noise_at(k) : predict_noise(x);
  const double a = updated.a[k];
  double sigma2 = updated.squared_deviation(k, mu) / a / nu_hat_;
  sigma2 = std::max(sigma2, 1e-12);
  return fuse_latent(np.mu_g, np.var_g, updated.a[k], sigma2);
}

namespace {

struct Candidate {
  HetGPParams params;
  double value = -INFINITY;
  bool converged = false;
};

Candidate optimize_from(const HetGPLikelihood& lik, const HetGPParams& start, int max_iterations,
                        FitReport* report) {
  Vec lower, upper;
  lik.bounds(start.homoskedastic, lower, upper);
  const Vec x0 = lik.pack(start).cwiseMax(lower).cwiseMin(upper);
  const bool hom = start.homoskedastic;
  Objective objective = [&](const Vec& v, Vec& g) {
    Vec grad;
    const LikelihoodValue lv = lik.evaluate(lik.unpack(v, hom), &grad);
    if (!lv.ok) {
      g.setZero();
      return std::numeric_limits<double>::infinity();
    }
    g = -grad;
    return -lv.value;
  };
  BoxOptions bo;
  bo.max_iterations = max_iterations;
  bo.max_evaluations = 4 * max_iterations + 20;
  bo.pg_tolerance = 1e-6;
  bo.f_tolerance = 1e-10;
  const BoxResult r = minimize_box(objective, x0, lower, upper, bo);
  if (report) {
    report->evaluations += r.evaluations;
    ++report->starts;
  }
  Candidate c;
  c.params = lik.unpack(r.x, hom);
  c.value = std::isfinite(r.value) ? -r.value : -INFINITY;
  c.converged = r.converged;
  return c;
}

}  // namespace

HetGP HetGP::fit(const UniqueDesign& design, const HetGPOptions& options, const HetGPParams* warm, bool cold,
                 FitReport* report) {
  const int n = design.n();
  const int d = design.dim();
  if (n == 0) throw std::invalid_argument("HetGP::fit: empty design");
  const double offset = response_mean(design);
  const HetGPLikelihood lik(design, offset, options);
  const bool hetero = !options.force_homoskedastic && n >= options.min_hetero_n;

  FitReport local;
  FitReport& rep = report ? *report : local;
  rep = FitReport{};
  Candidate best;
  auto consider = [&](const Candidate& c) {
    if (c.value > best.value) best = c;
  };

  const bool warm_usable = warm && warm->theta.size() == d && warm->homoskedastic == !hetero &&
                           (!hetero || (warm->theta_g.size() == d && warm->delta.size() == n));
  if (warm_usable) consider(optimize_from(lik, *warm, options.warm_max_iterations, &rep));

  if (cold || !warm_usable) {
    // Homoskedastic starts.
    const bool gaussian = options.family == KernelFamily::Gaussian;
    const double theta_starts[3] = {gaussian ? 0.01 : 0.1, gaussian ? 0.1 : 0.3, gaussian ? 1.0 : 1.0};
    double lambda0 = 0.1;
    {
      double within = 0.0, dof = 0.0;
      for (int i = 0; i < n; ++i) {
        within += design.a[i] * design.s2[i];
        dof += design.a[i] - 1;
      }
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += design.squared_deviation(i, offset);
      total /= static_cast<double>(design.total());
      if (dof > 0.0 && total > 0.0) lambda0 = clamp(within / dof / total, 1e-4, 10.0);
    }
    Candidate hom;
    const int starts = std::max(1, options.multistarts);
    for (int s = 0; s < starts; ++s) {
      HetGPParams p;
      p.homoskedastic = true;
      p.theta = Vec::Constant(d, clamp(theta_starts[s % 3], options.theta_lower, options.theta_upper));
      p.log_lambda = std::log(lambda0);
      const Candidate c = optimize_from(lik, p, options.max_iterations, &rep);
      if (c.value > hom.value) hom = c;
    }
    if (!hetero) {
      consider(hom);
    } else if (std::isfinite(hom.value)) {
      // Heteroskedastic starts derived from the homoskedastic fit.
      const HetGP hm(design, hom.params, options, offset);
      Vec emp(n);
      for (int i = 0; i < n; ++i) {
        const double mu = hm.surrogate().predict(design.x.row(i).transpose()).mean;
        const double s2 = std::max(design.squared_deviation(i, mu) / design.a[i] / hm.nu_hat(), 1e-6);
        const double half = 0.5 * design.a[i];
        emp[i] = clamp(std::log(s2) - boost::math::digamma(half) - std::numbers::ln2 + std::log(double(design.a[i])),
                       options.delta_lower, options.delta_upper);
      }
      const double l0 = hom.params.log_lambda;
      const double tg_mid = clamp(0.5, options.theta_g_lower, options.theta_g_upper);
      for (int s = 0; s < starts; ++s) {
        HetGPParams p;
        p.homoskedastic = false;
        p.theta = hom.params.theta;
        p.theta_g = Vec::Constant(d, tg_mid);
        p.g = clamp(0.1, options.g_lower, options.g_upper);
        switch (s % 3) {
          case 0:
            p.delta = emp;
            p.theta_g = Vec::Constant(d, clamp(2.0, options.theta_g_lower, options.theta_g_upper));
            break;
          case 1: p.delta = emp; break;
          default:
            p.delta = 0.5 * (emp.array() + l0).matrix();
            p.theta_g = Vec::Constant(d, clamp(0.2, options.theta_g_lower, options.theta_g_upper));
            p.g = clamp(1.0, options.g_lower, options.g_upper);
            break;
        }
        if (std::abs(p.delta.dot(p.delta)) < 1e-12) p.delta.array() += 1e-3;
        consider(optimize_from(lik, p, options.max_iterations, &rep));
      }
      if (std::isfinite(best.value) && !best.params.homoskedastic &&
          hom.value >= lik.evaluate(best.params).mean_part)
        best = hom;
    }
  }
  if (!std::isfinite(best.value)) throw std::runtime_error("HetGP::fit: no finite likelihood found");
  rep.log_likelihood = best.value;
  rep.converged = best.converged;
  return HetGP(design, best.params, options, offset);
}

}  // namespace hetdoe
