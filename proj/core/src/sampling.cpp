#include "hetdoe/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hetdoe {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (const std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

Mat latin_hypercube(int n, int d, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("latin_hypercube: n and d must be positive");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Mat X(n, d);
  std::vector<int> perm(n);
  for (int p = 0; p < d; ++p) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) X(i, p) = (perm[i] + unif(rng)) / n;
  }
  return X;
}

double min_distance(const MatRef& X) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) best = std::min(best, (X.row(i) - X.row(j)).squaredNorm());
  return std::sqrt(best);
}

Mat maximin_lhs(int n, int d, Rng& rng, int candidates) {
  Mat best = latin_hypercube(n, d, rng);
  double best_dist = min_distance(best);
  for (int c = 1; c < candidates; ++c) {
    Mat X = latin_hypercube(n, d, rng);
    const double dist = min_distance(X);
    if (dist > best_dist) {
      best = std::move(X);
      best_dist = dist;
    }
  }
  return best;
}

Vec unit_grid(int n) {
  if (n < 1) throw std::invalid_argument("unit_grid: n must be positive");
  if (n == 1) return Vec::Constant(1, 0.5);
  return Vec::LinSpaced(n, 0.0, 1.0);
}

Mat tensor_grid(int per_dim, int d) {
  const Vec g = unit_grid(per_dim);
  long total = 1;
  for (int p = 0; p < d; ++p) total *= per_dim;
  Mat X(total, d);
  for (long r = 0; r < total; ++r) {
    long idx = r;
    for (int p = 0; p < d; ++p) {
      X(r, p) = g[idx % per_dim];
      idx /= per_dim;
    }
  }
  return X;
}

}  // namespace hetdoe
