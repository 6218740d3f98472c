#pragma once

// Stationary separable correlation kernels on the unit cube [0,1]^d, together
// with the closed-form integrals of kernel products
//
//     w(xi, xj) = \int_{[0,1]^d} c(xi, x) c(xj, x) dx
//
// and their derivatives. Everything here works on the *correlation* c; the
// process variance nu only enters through KernelSpec::nu and is applied by the
// callers (k = nu * c, W = nu^2 * w, E = nu).
//
// Parameterization per input dimension (r = |x - x'|):
//   Gaussian   c = exp(-r^2 / theta)                        (theta is a squared lengthscale)
//   Matern12   c = exp(-r / theta)
//   Matern32   c = (1 + sqrt(3) r / theta) exp(-sqrt(3) r / theta)
//   Matern52   c = (1 + sqrt(5) r / theta + 5 r^2 / (3 theta^2)) exp(-sqrt(5) r / theta)

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace hetdoe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<const Eigen::MatrixXd>;

enum class KernelFamily { Gaussian, Matern52, Matern32, Matern12 };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  Vec theta;  // one entry per input dimension
  double nu = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily f, Vec th, double scale = 1.0)
      : family(f), theta(std::move(th)), nu(scale) {}
  static KernelSpec isotropic(KernelFamily f, int dim, double theta, double nu = 1.0) {
    return KernelSpec(f, Vec::Constant(dim, theta), nu);
  }

  int dim() const { return static_cast<int>(theta.size()); }

  // Throws std::invalid_argument unless theta > 0 componentwise and nu > 0.
  void validate() const;
};

// Per-dimension building blocks. Exposed for tests and for the separable
// assembly below; x, xp, xi, xj are scalars in [0, 1].
namespace kernel1d {

double correlation(KernelFamily f, double theta, double x, double xp);
// d c(xi, x) / d x. For Matern families at x == xi the derivative is
// undefined; 0 is returned and *degenerate is set when given.
double correlation_dx(KernelFamily f, double theta, double xi, double x,
                      bool* degenerate = nullptr);
// d c(x, xp) / d theta.
double correlation_dtheta(KernelFamily f, double theta, double x, double xp);

double w(KernelFamily f, double theta, double xi, double xj);
// d w(x, xi) / d x.
double w_dx(KernelFamily f, double theta, double x, double xi);
// d w(x, x) / d x.
double w_self_dx(KernelFamily f, double theta, double x);

}  // namespace kernel1d

// Product correlation prod_p c_p(x_p, xp_p). Throws on dimension mismatch.
double correlation(const KernelSpec& spec, const VecRef& x, const VecRef& xp);
inline double covariance(const KernelSpec& spec, const VecRef& x, const VecRef& xp) {
  return spec.nu * correlation(spec, x, xp);
}

// Gradient of c(xi, x) with respect to x.
Vec kernel_grad(const KernelSpec& spec, const VecRef& xi, const VecRef& x,
                bool* degenerate = nullptr);

// Gradient of c(x, xp) with respect to each theta_p.
Vec correlation_theta_grad(const KernelSpec& spec, const VecRef& x, const VecRef& xp);

double w_integral(const KernelSpec& spec, const VecRef& xi, const VecRef& xj);
// Gradient of w(x, xi) with respect to x (the c1 entries).
Vec w_grad(const KernelSpec& spec, const VecRef& x, const VecRef& xi);
// Gradient of w(x, x) with respect to x (c2).
Vec w_self_grad(const KernelSpec& spec, const VecRef& x);

// Integral of k(x, x) over the unit cube; equals nu for all stationary families.
inline double e_constant(const KernelSpec& spec) { return spec.nu; }

// Matrix helpers. Rows of X and Y are points.
Mat correlation_matrix(const KernelSpec& spec, const MatRef& X);
Mat cross_correlation(const KernelSpec& spec, const MatRef& X, const MatRef& Y);
Vec correlation_vector(const KernelSpec& spec, const VecRef& x, const MatRef& X);
Mat w_matrix(const KernelSpec& spec, const MatRef& X);
Vec w_vector(const KernelSpec& spec, const VecRef& x, const MatRef& X);
// Rows i of dc (and dw) hold the x-gradients of c(x_i, x) (and w(x, x_i)) for
// every row x_i of X.
void cross_gradients(const KernelSpec& spec, const VecRef& x, const MatRef& X, Mat& dc, Mat* dw = nullptr);

}  // namespace hetdoe
