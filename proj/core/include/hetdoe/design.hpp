#pragma once

// Unique-location ("unique-n") sufficient statistics for replicated data.

#include "hetdoe/kernel.hpp"

#include <utility>

namespace hetdoe {

// Rows closer than this (max-norm, unit-cube coordinates) are the same location.
inline constexpr double kDuplicateTol = 1e-10;

struct UniqueDesign {
  Mat x;             // n x d unique locations
  Eigen::VectorXi a; // replicate counts
  Vec ybar;          // per-location means
  Vec s2;            // uncorrected within-location variances (1/a) sum (y - ybar)^2

  UniqueDesign() = default;
  explicit UniqueDesign(int dim) : x(0, dim), a(0), ybar(0), s2(0) {}

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  long total() const { return a.size() ? static_cast<long>(a.sum()) : 0L; }

  // Index of the location within tol of x, or -1.
  int find(const VecRef& point, double tol = kDuplicateTol) const;

  // Online (Welford) update of location k with one observation.
  void add_to(int k, double y);
  // Appends a new location holding a single observation; returns its index.
  int append(const VecRef& point, double y);
  // Routes y to an existing location within tol or appends a new one.
  // Returns (index, is_new).
  std::pair<int, bool> add(const VecRef& point, double y, double tol = kDuplicateTol);

  // Sum over replicates of (y - center)^2 at location k, from the sufficient statistics.
  double squared_deviation(int k, double center) const {
    const double dm = ybar[k] - center;
    return a[k] * (s2[k] + dm * dm);
  }
};

// Groups the rows of X (N x d, inside [0,1]^d) that agree within tol.
// Throws std::invalid_argument on empty input, size mismatch, or non-finite Y.
UniqueDesign ingest(const MatRef& X, const VecRef& Y, double tol = kDuplicateTol);

// A full-N data set with exactly the sufficient statistics of `design`:
// location i is repeated a_i times with values ybar_i + s_i z_j, z fixed,
// mean zero and unit (uncorrected) variance.
std::pair<Mat, Vec> expand(const UniqueDesign& design);

}  // namespace hetdoe
