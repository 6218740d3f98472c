#include "hetdoe/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hetdoe {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern12: return "matern12";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "gaussian" || name == "Gaussian") return KernelFamily::Gaussian;
  if (name == "matern52" || name == "Matern5_2") return KernelFamily::Matern52;
  if (name == "matern32" || name == "Matern3_2") return KernelFamily::Matern32;
  if (name == "matern12" || name == "Matern1_2" || name == "exponential") return KernelFamily::Matern12;
  throw std::invalid_argument("unknown kernel family: " + std::string(name));
}

void KernelSpec::validate() const {
  if (theta.size() == 0) throw std::invalid_argument("KernelSpec: empty theta");
  if ((theta.array() <= 0.0).any() || !theta.allFinite())
    throw std::invalid_argument("KernelSpec: theta must be positive and finite");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("KernelSpec: nu must be positive");
}

namespace {

// A Matern correlation as a function of scaled distance s = r / theta is
// P(s) exp(-a s); its derivative in r is R(s) exp(-a s) / theta with
// R = P' - a P. Both are stored as polynomials of degree <= 2.
struct Profile {
  std::array<double, 3> coef{};
  double rate = 1.0;
};

struct MaternShape {
  Profile value;
  Profile slope;  // R(s); divide by theta to get d/dr
};

MaternShape matern_shape(KernelFamily f) {
  const double s3 = std::sqrt(3.0);
  const double s5 = std::sqrt(5.0);
  switch (f) {
    case KernelFamily::Matern12: return {{{1.0, 0.0, 0.0}, 1.0}, {{-1.0, 0.0, 0.0}, 1.0}};
    case KernelFamily::Matern32: return {{{1.0, s3, 0.0}, s3}, {{0.0, -3.0, 0.0}, s3}};
    case KernelFamily::Matern52:
      return {{{1.0, s5, 5.0 / 3.0}, s5}, {{0.0, -5.0 / 3.0, -5.0 * s5 / 3.0}, s5}};
    case KernelFamily::Gaussian: break;
  }
  throw std::logic_error("matern_shape called with a non-Matern family");
}

double eval_poly(const std::array<double, 3>& c, double s) { return c[0] + s * (c[1] + s * c[2]); }

using Poly = std::array<double, 5>;

// Coefficients in u of P((c + sign*u) / theta).
Poly shift_scale(const std::array<double, 3>& p, double c, double sign, double theta) {
  Poly out{};
  const double it = 1.0 / theta;
  // (c + sign u)^k / theta^k expanded binomially, k <= 2.
  out[0] += p[0];
  out[0] += p[1] * c * it;
  out[1] += p[1] * sign * it;
  out[0] += p[2] * c * c * it * it;
  out[1] += p[2] * 2.0 * c * sign * it * it;
  out[2] += p[2] * it * it;
  return out;
}

Poly multiply(const Poly& a, const Poly& b) {
  Poly out{};
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) out[i + j] += a[i] * b[j];
  return out;
}

// \int_0^L u^m exp(-b u) du for b >= 0, evaluated without cancellation.
double monomial_exp_integral(int m, double b, double L) {
  if (L <= 0.0) return 0.0;
  const double z = b * L;
  const double Lm1 = std::pow(L, m + 1);
  if (z < m + 1.0) {
    // L^{m+1} sum_j (-z)^j / (j! (m + 1 + j))
    double term = 1.0;
    double sum = 1.0 / (m + 1);
    for (int j = 1; j < 200; ++j) {
      term *= -z / j;
      const double add = term / (m + 1 + j);
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return Lm1 * sum;
  }
  // m! / b^{m+1} * (1 - exp(-z) sum_{j<=m} z^j / j!)
  double poisson = 0.0;
  double term = 1.0;
  for (int j = 0; j <= m; ++j) {
    if (j > 0) term *= z / j;
    poisson += term;
  }
  double fact = 1.0;
  for (int j = 2; j <= m; ++j) fact *= j;
  return fact / std::pow(b, m + 1) * (1.0 - std::exp(-z) * poisson);
}

double poly_exp_integral(const Poly& q, double b, double L) {
  double s = 0.0;
  for (int m = 0; m < 5; ++m)
    if (q[m] != 0.0) s += q[m] * monomial_exp_integral(m, b, L);
  return s;
}

// \int_0^1 fA(x1 - t) fB(x2 - t) dt where fX(s) = [sgn(s)] X(|s|/theta) exp(-a |s| / theta)
// and the sign factor is present only when the corresponding flag is set.
double pair_integral(const Profile& A, bool signedA, const Profile& B, bool signedB, double x1,
                     double x2, double theta) {
  const double a = A.rate;
  const double lo = std::min(x1, x2);
  const double hi = std::max(x1, x2);
  const double D = hi - lo;
  const double decay = std::exp(-a * D / theta);
  if (decay == 0.0) {
    // the two outer pieces and the middle piece all carry this factor
    return 0.0;
  }
  const double b = 2.0 * a / theta;

  double total = 0.0;
  // left piece: t = lo - u, both arguments positive
  if (lo > 0.0) {
    const Poly q = multiply(shift_scale(A.coef, x1 - lo, 1.0, theta), shift_scale(B.coef, x2 - lo, 1.0, theta));
    total += poly_exp_integral(q, b, lo);
  }
  // right piece: t = hi + u, both arguments negative
  if (hi < 1.0) {
    const double sign = (signedA ? -1.0 : 1.0) * (signedB ? -1.0 : 1.0);
    const Poly q = multiply(shift_scale(A.coef, hi - x1, 1.0, theta), shift_scale(B.coef, hi - x2, 1.0, theta));
    total += sign * poly_exp_integral(q, b, 1.0 - hi);
  }
  // middle piece: t = lo + u, exponent constant
  if (D > 0.0) {
    Poly q;
    double sign;
    if (x1 <= x2) {
      q = multiply(shift_scale(A.coef, 0.0, 1.0, theta), shift_scale(B.coef, D, -1.0, theta));
      sign = signedA ? -1.0 : 1.0;
    } else {
      q = multiply(shift_scale(A.coef, D, -1.0, theta), shift_scale(B.coef, 0.0, 1.0, theta));
      sign = signedB ? -1.0 : 1.0;
    }
    total += sign * poly_exp_integral(q, 0.0, D);
  }
  return decay * total;
}

Profile scaled(Profile p, double factor) {
  for (double& c : p.coef) c *= factor;
  return p;
}

void check_dims(const KernelSpec& spec, const VecRef& a, const VecRef& b) {
  if (a.size() != spec.theta.size() || b.size() != spec.theta.size())
    throw std::invalid_argument("kernel: dimension mismatch between points and theta");
}

}  // namespace

namespace kernel1d {

double correlation(KernelFamily f, double theta, double x, double xp) {
  const double r = std::abs(x - xp);
  if (f == KernelFamily::Gaussian) return std::exp(-r * r / theta);
  const MaternShape m = matern_shape(f);
  const double s = r / theta;
  return eval_poly(m.value.coef, s) * std::exp(-m.value.rate * s);
}

double correlation_dx(KernelFamily f, double theta, double xi, double x, bool* degenerate) {
  if (f == KernelFamily::Gaussian) {
    const double diff = xi - x;
    return 2.0 * diff / theta * std::exp(-diff * diff / theta);
  }
  if (x == xi) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const MaternShape m = matern_shape(f);
  const double r = std::abs(x - xi);
  const double s = r / theta;
  const double sign = x > xi ? 1.0 : -1.0;
  return sign * eval_poly(m.slope.coef, s) * std::exp(-m.slope.rate * s) / theta;
}

double correlation_dtheta(KernelFamily f, double theta, double x, double xp) {
  const double r = std::abs(x - xp);
  if (f == KernelFamily::Gaussian) return std::exp(-r * r / theta) * r * r / (theta * theta);
  const MaternShape m = matern_shape(f);
  const double s = r / theta;
  return -(s / theta) * eval_poly(m.slope.coef, s) * std::exp(-m.slope.rate * s);
}

double w(KernelFamily f, double theta, double xi, double xj) {
  if (f == KernelFamily::Gaussian) {
    const double diff = xi - xj;
    const double sum = xi + xj;
    const double rt = std::sqrt(2.0 * theta);
    return std::sqrt(2.0 * std::numbers::pi * theta) / 4.0 * std::exp(-diff * diff / (2.0 * theta)) *
           (std::erf((2.0 - sum) / rt) + std::erf(sum / rt));
  }
  const MaternShape m = matern_shape(f);
  return pair_integral(m.value, false, m.value, false, xi, xj, theta);
}

double w_dx(KernelFamily f, double theta, double x, double xi) {
  if (f == KernelFamily::Gaussian) {
    const double diff = x - xi;
    const double sum = x + xi;
    const double rt = std::sqrt(2.0 * theta);
    const double A = std::sqrt(2.0 * std::numbers::pi * theta) / 4.0;
    const double E = std::exp(-diff * diff / (2.0 * theta));
    const double F = std::erf((2.0 - sum) / rt) + std::erf(sum / rt);
    const double ux = 1.0 - x;
    const double uxi = 1.0 - xi;
    return -A * diff / theta * E * F +
           0.5 * (std::exp(-(x * x + xi * xi) / theta) - std::exp(-(ux * ux + uxi * uxi) / theta));
  }
  const MaternShape m = matern_shape(f);
  return pair_integral(scaled(m.slope, 1.0 / theta), true, m.value, false, x, xi, theta);
}

double w_self_dx(KernelFamily f, double theta, double x) {
  if (f == KernelFamily::Gaussian) {
    const double ux = 1.0 - x;
    return std::exp(-2.0 * x * x / theta) - std::exp(-2.0 * ux * ux / theta);
  }
  return 2.0 * w_dx(f, theta, x, x);
}

}  // namespace kernel1d

double correlation(const KernelSpec& spec, const VecRef& x, const VecRef& xp) {
  check_dims(spec, x, xp);
  double c = 1.0;
  for (Eigen::Index p = 0; p < x.size(); ++p) c *= kernel1d::correlation(spec.family, spec.theta[p], x[p], xp[p]);
  return c;
}

Vec kernel_grad(const KernelSpec& spec, const VecRef& xi, const VecRef& x, bool* degenerate) {
  check_dims(spec, xi, x);
  const Eigen::Index d = x.size();
  Vec c(d), dc(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    c[p] = kernel1d::correlation(spec.family, spec.theta[p], xi[p], x[p]);
    dc[p] = kernel1d::correlation_dx(spec.family, spec.theta[p], xi[p], x[p], degenerate);
  }
  Vec g(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    double prod = dc[p];
    for (Eigen::Index q = 0; q < d; ++q)
      if (q != p) prod *= c[q];
    g[p] = prod;
  }
  return g;
}

Vec correlation_theta_grad(const KernelSpec& spec, const VecRef& x, const VecRef& xp) {
  check_dims(spec, x, xp);
  const Eigen::Index d = x.size();
  Vec c(d), g(d);
  for (Eigen::Index p = 0; p < d; ++p) c[p] = kernel1d::correlation(spec.family, spec.theta[p], x[p], xp[p]);
  for (Eigen::Index p = 0; p < d; ++p) {
    double prod = kernel1d::correlation_dtheta(spec.family, spec.theta[p], x[p], xp[p]);
    for (Eigen::Index q = 0; q < d; ++q)
      if (q != p) prod *= c[q];
    g[p] = prod;
  }
  return g;
}

double w_integral(const KernelSpec& spec, const VecRef& xi, const VecRef& xj) {
  check_dims(spec, xi, xj);
  double w = 1.0;
  for (Eigen::Index p = 0; p < xi.size(); ++p) w *= kernel1d::w(spec.family, spec.theta[p], xi[p], xj[p]);
  return w;
}

Vec w_grad(const KernelSpec& spec, const VecRef& x, const VecRef& xi) {
  check_dims(spec, x, xi);
  const Eigen::Index d = x.size();
  Vec w(d), dw(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    w[p] = kernel1d::w(spec.family, spec.theta[p], x[p], xi[p]);
    dw[p] = kernel1d::w_dx(spec.family, spec.theta[p], x[p], xi[p]);
  }
  Vec g(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    double prod = dw[p];
    for (Eigen::Index q = 0; q < d; ++q)
      if (q != p) prod *= w[q];
    g[p] = prod;
  }
  return g;
}

Vec w_self_grad(const KernelSpec& spec, const VecRef& x) {
  check_dims(spec, x, x);
  const Eigen::Index d = x.size();
  Vec w(d), dw(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    w[p] = kernel1d::w(spec.family, spec.theta[p], x[p], x[p]);
    dw[p] = kernel1d::w_self_dx(spec.family, spec.theta[p], x[p]);
  }
  Vec g(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    double prod = dw[p];
    for (Eigen::Index q = 0; q < d; ++q)
      if (q != p) prod *= w[q];
    g[p] = prod;
  }
  return g;
}

namespace {

void check_cols(const KernelSpec& spec, Eigen::Index cols) {
  if (cols != spec.theta.size()) throw std::invalid_argument("kernel: dimension mismatch between points and theta");
}

// Row-by-row products over dimensions without materializing the rows.
template <class F>
double row_product(const KernelSpec& spec, const MatRef& A, Eigen::Index i, const MatRef& B, Eigen::Index j, F f) {
  double v = 1.0;
  for (Eigen::Index p = 0; p < A.cols(); ++p) v *= f(spec.family, spec.theta[p], A(i, p), B(j, p));
  return v;
}

template <class F>
double point_product(const KernelSpec& spec, const VecRef& x, const MatRef& X, Eigen::Index i, F f) {
  double v = 1.0;
  for (Eigen::Index p = 0; p < x.size(); ++p) v *= f(spec.family, spec.theta[p], x[p], X(i, p));
  return v;
}

}  // namespace

Mat correlation_matrix(const KernelSpec& spec, const MatRef& X) {
  check_cols(spec, X.cols());
  const Eigen::Index n = X.rows();
  Mat C(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    C(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) C(i, j) = C(j, i) = row_product(spec, X, i, X, j, kernel1d::correlation);
  }
  return C;
}

Mat cross_correlation(const KernelSpec& spec, const MatRef& X, const MatRef& Y) {
  check_cols(spec, X.cols());
  check_cols(spec, Y.cols());
  Mat C(X.rows(), Y.rows());
  for (Eigen::Index j = 0; j < Y.rows(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) C(i, j) = row_product(spec, X, i, Y, j, kernel1d::correlation);
  return C;
}

Vec correlation_vector(const KernelSpec& spec, const VecRef& x, const MatRef& X) {
  check_cols(spec, x.size());
  check_cols(spec, X.cols());
  Vec c(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) c[i] = point_product(spec, x, X, i, kernel1d::correlation);
  return c;
}

Mat w_matrix(const KernelSpec& spec, const MatRef& X) {
  check_cols(spec, X.cols());
  const Eigen::Index n = X.rows();
  Mat W(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) W(i, j) = W(j, i) = row_product(spec, X, i, X, j, kernel1d::w);
  return W;
}

Vec w_vector(const KernelSpec& spec, const VecRef& x, const MatRef& X) {
  check_cols(spec, x.size());
  check_cols(spec, X.cols());
  Vec w(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) w[i] = point_product(spec, x, X, i, kernel1d::w);
  return w;
}

void cross_gradients(const KernelSpec& spec, const VecRef& x, const MatRef& X, Mat& dc, Mat* dw) {
  check_cols(spec, x.size());
  check_cols(spec, X.cols());
  const Eigen::Index n = X.rows(), d = x.size();
  dc.resize(n, d);
  if (dw) dw->resize(n, d);
  constexpr int kStack = 8;
  double cbuf[kStack], dcbuf[kStack], wbuf[kStack], dwbuf[kStack];
  std::vector<double> heap;
  double *c = cbuf, *dcv = dcbuf, *w = wbuf, *dwv = dwbuf;
  if (d > kStack) {
    heap.resize(4 * d);
    c = heap.data();
    dcv = c + d;
    w = dcv + d;
    dwv = w + d;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < d; ++p) {
      c[p] = kernel1d::correlation(spec.family, spec.theta[p], X(i, p), x[p]);
      dcv[p] = kernel1d::correlation_dx(spec.family, spec.theta[p], X(i, p), x[p]);
      if (dw) {
        w[p] = kernel1d::w(spec.family, spec.theta[p], x[p], X(i, p));
        dwv[p] = kernel1d::w_dx(spec.family, spec.theta[p], x[p], X(i, p));
      }
    }
    for (Eigen::Index p = 0; p < d; ++p) {
      double g = dcv[p], h = dw ? dwv[p] : 0.0;
      for (Eigen::Index q = 0; q < d; ++q) {
        if (q == p) continue;
        g *= c[q];
        if (dw) h *= w[q];
      }
      dc(i, p) = g;
      if (dw) (*dw)(i, p) = h;
    }
  }
}

}  // namespace hetdoe
