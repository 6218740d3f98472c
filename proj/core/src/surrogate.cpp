#include "hetdoe/surrogate.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace hetdoe {

double spd_inverse(const MatRef& A, Mat& inverse, double scale) {
  const Eigen::Index n = A.rows();
  if (n == 0) {
    inverse.resize(0, 0);
    return 0.0;
  }
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Mat M = A;
    if (jitter > 0.0) M.diagonal().array() += jitter;
    Eigen::LLT<Mat> llt(M);
    if (llt.info() == Eigen::Success) {
      inverse = llt.solve(Mat::Identity(n, n));
      inverse = 0.5 * (inverse + inverse.transpose()).eval();
      if (inverse.allFinite()) return jitter;
    }
    jitter = jitter == 0.0 ? 1e-8 * scale : jitter * 10.0;
  }
  throw std::runtime_error("spd_inverse: matrix is not positive definite even after jitter");
}

Surrogate::Surrogate(KernelSpec kernel, UniqueDesign design, Vec noise, double mean_offset)
    : kernel_(std::move(kernel)), design_(std::move(design)), noise_(std::move(noise)), offset_(mean_offset) {
  kernel_.validate();
  if (design_.n() > 0 && design_.dim() != kernel_.dim())
    throw std::invalid_argument("Surrogate: design dimension does not match kernel");
  if (noise_.size() != design_.n()) throw std::invalid_argument("Surrogate: noise vector size mismatch");
  if ((noise_.array() < 0.0).any()) throw std::invalid_argument("Surrogate: negative noise variance");
  if (design_.n() == 0) design_.x.resize(0, kernel_.dim());
  rebuild();
}

Mat Surrogate::K() const {
  Mat K = kernel_.nu * correlation_matrix(kernel_, design_.x);
  for (int i = 0; i < n(); ++i) K(i, i) += noise_[i] / design_.a[i];
  return K;
}

void Surrogate::rebuild() {
  jitter_ = spd_inverse(K(), kinv_, kernel_.nu);
  w_ = (kernel_.nu * kernel_.nu) * w_matrix(kernel_, design_.x);
  trace_ = kinv_.cwiseProduct(w_).sum();
  updates_since_rebuild_ = 0;
  refresh_alpha();
}

void Surrogate::refresh_alpha() {
  alpha_ = kinv_ * (design_.ybar.array() - offset_).matrix();
}

Vec Surrogate::cov_vector(const VecRef& x) const {
  return kernel_.nu * correlation_vector(kernel_, x, design_.x);
}

Prediction Surrogate::predict(const VecRef& x, double r_x) const {
  Prediction p;
  if (n() == 0) {
    p.mean = offset_;
    p.sigma2_denoised = kernel_.nu;
    p.sigma2 = kernel_.nu + r_x;
    return p;
  }
  const Vec k = cov_vector(x);
  p.mean = offset_ + k.dot(alpha_);
  p.sigma2_denoised = kernel_.nu - k.dot(kinv_ * k);
  p.sigma2 = p.sigma2_denoised + r_x;
  return p;
}

Surrogate Surrogate::extend_new_location(const VecRef& x, double r, std::optional<double> y) const {
  if (x.size() != kernel_.dim()) throw std::invalid_argument("extend_new_location: dimension mismatch");
  if (r < 0.0) throw std::invalid_argument("extend_new_location: negative noise");
  const Vec k = cov_vector(x);
  const Vec u = kinv_ * k;
  const double base = kernel_.nu - k.dot(u);
  double r_used = r;
  double sigma2 = base + r_used;
  double bump = 1e-8 * kernel_.nu;
  for (int attempt = 0; attempt < 3 && !(sigma2 > 0.0); ++attempt) {
    r_used = r + bump;
    sigma2 = base + r_used;
    bump *= 10.0;
  }
  if (!(sigma2 > 0.0)) throw std::runtime_error("extend_new_location: non-positive predictive variance");

  const double nu2 = kernel_.nu * kernel_.nu;
  const Vec w = nu2 * w_vector(kernel_, x, design_.x);
  const double wxx = nu2 * w_integral(kernel_, x, x);

  Surrogate out;
  out.kernel_ = kernel_;
  out.offset_ = offset_;
  out.design_ = design_;
  const double yval = y ? *y : predict(x).mean;
  out.design_.append(x, yval);
  out.noise_.resize(n() + 1);
  out.noise_.head(n()) = noise_;
  out.noise_[n()] = r_used;

  const int m = n();
  out.kinv_.resize(m + 1, m + 1);
  out.kinv_.topLeftCorner(m, m) = kinv_ + (u * u.transpose()) / sigma2;
  out.kinv_.col(m).head(m) = -u / sigma2;
  out.kinv_.row(m).head(m) = -u.transpose() / sigma2;
  out.kinv_(m, m) = 1.0 / sigma2;

  out.w_.resize(m + 1, m + 1);
  out.w_.topLeftCorner(m, m) = w_;
  out.w_.col(m).head(m) = w;
  out.w_.row(m).head(m) = w.transpose();
  out.w_(m, m) = wxx;

  out.trace_ = trace_ + (u.dot(w_ * u) - 2.0 * w.dot(u) + wxx) / sigma2;
  out.jitter_ = jitter_;
  out.updates_since_rebuild_ = updates_since_rebuild_ + 1;
  if (out.updates_since_rebuild_ >= kRebuildEvery)
    out.rebuild();
  else
    out.refresh_alpha();
  return out;
}

Surrogate Surrogate::add_replicate(int k, std::optional<double> y) const {
  if (k < 0 || k >= n()) throw std::out_of_range("add_replicate: index out of range");
  Surrogate out = *this;
  const double r = noise_[k];
  const double a = design_.a[k];
  if (r > 0.0) {
    const double denom = a * (a + 1.0) / r - kinv_(k, k);
    const Vec col = kinv_.col(k);
    out.kinv_.noalias() += (col * col.transpose()) / denom;
    out.trace_ = trace_ + col.dot(w_ * col) / denom;
  }
  out.design_.add_to(k, y ? *y : design_.ybar[k]);
  out.updates_since_rebuild_ = updates_since_rebuild_ + 1;
  if (out.updates_since_rebuild_ >= kRebuildEvery)
    out.rebuild();
  else
    out.refresh_alpha();
  return out;
}

}  // namespace hetdoe
