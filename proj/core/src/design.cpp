#include "hetdoe/design.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hetdoe {

int UniqueDesign::find(const VecRef& point, double tol) const {
  for (int i = 0; i < n(); ++i)
    if ((x.row(i).transpose() - point).cwiseAbs().maxCoeff() <= tol) return i;
  return -1;
}

void UniqueDesign::add_to(int k, double y) {
  if (k < 0 || k >= n()) throw std::out_of_range("UniqueDesign::add_to: index out of range");
  const double a0 = a[k];
  const double a1 = a0 + 1.0;
  const double mean0 = ybar[k];
  const double mean1 = mean0 + (y - mean0) / a1;
  const double m2 = a0 * s2[k] + (y - mean0) * (y - mean1);
  a[k] += 1;
  ybar[k] = mean1;
  s2[k] = std::max(0.0, m2 / a1);
}

int UniqueDesign::append(const VecRef& point, double y) {
  if (x.cols() == 0 && x.rows() == 0) x.resize(0, point.size());
  if (point.size() != x.cols()) throw std::invalid_argument("UniqueDesign::append: dimension mismatch");
  const int k = n();
  x.conservativeResize(k + 1, Eigen::NoChange);
  x.row(k) = point.transpose();
  a.conservativeResize(k + 1);
  a[k] = 1;
  ybar.conservativeResize(k + 1);
  ybar[k] = y;
  s2.conservativeResize(k + 1);
  s2[k] = 0.0;
  return k;
}

std::pair<int, bool> UniqueDesign::add(const VecRef& point, double y, double tol) {
  const int k = find(point, tol);
  if (k >= 0) {
    add_to(k, y);
    return {k, false};
  }
  return {append(point, y), true};
}

UniqueDesign ingest(const MatRef& X, const VecRef& Y, double tol) {
  if (X.rows() == 0) throw std::invalid_argument("ingest: empty input");
  if (X.rows() != Y.size()) throw std::invalid_argument("ingest: X and Y sizes differ");
  if (!Y.allFinite()) throw std::invalid_argument("ingest: non-finite response");
  if (!X.allFinite()) throw std::invalid_argument("ingest: non-finite input");

  const Eigen::Index N = X.rows();
  std::vector<int> group(N);
  std::vector<Eigen::Index> first;  // representative row per group
  for (Eigen::Index r = 0; r < N; ++r) {
    int g = -1;
    for (std::size_t i = 0; i < first.size(); ++i)
      if ((X.row(first[i]) - X.row(r)).cwiseAbs().maxCoeff() <= tol) {
        g = static_cast<int>(i);
        break;
      }
    if (g < 0) {
      g = static_cast<int>(first.size());
      first.push_back(r);
    }
    group[r] = g;
  }

  const int n = static_cast<int>(first.size());
  UniqueDesign d(static_cast<int>(X.cols()));
  d.x.resize(n, X.cols());
  d.a = Eigen::VectorXi::Zero(n);
  d.ybar = Vec::Zero(n);
  d.s2 = Vec::Zero(n);
  for (int i = 0; i < n; ++i) d.x.row(i) = X.row(first[i]);
  for (Eigen::Index r = 0; r < N; ++r) {
    d.a[group[r]] += 1;
    d.ybar[group[r]] += Y[r];
  }
  for (int i = 0; i < n; ++i) d.ybar[i] /= d.a[i];
  for (Eigen::Index r = 0; r < N; ++r) {
    const double e = Y[r] - d.ybar[group[r]];
    d.s2[group[r]] += e * e;
  }
  for (int i = 0; i < n; ++i) d.s2[i] = d.a[i] > 1 ? d.s2[i] / d.a[i] : 0.0;
  return d;
}

std::pair<Mat, Vec> expand(const UniqueDesign& design) {
  const long N = design.total();
  Mat X(N, design.dim());
  Vec Y(N);
  long r = 0;
  for (int i = 0; i < design.n(); ++i) {
    const int ai = design.a[i];
    const double mid = 0.5 * (ai - 1);
    double norm = 0.0;
    for (int j = 0; j < ai; ++j) norm += (j - mid) * (j - mid);
    norm = ai > 1 ? std::sqrt(norm / ai) : 1.0;
    const double s = std::sqrt(design.s2[i]);
    for (int j = 0; j < ai; ++j, ++r) {
      X.row(r) = design.x.row(i);
      Y[r] = ai > 1 ? design.ybar[i] + s * (j - mid) / norm : design.ybar[i];
    }
  }
  return {X, Y};
}

}  // namespace hetdoe
