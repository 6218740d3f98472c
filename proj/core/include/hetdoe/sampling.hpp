#pragma once

#include "hetdoe/kernel.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hetdoe {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Deterministic sub-seed for a stream identified by (seed, keys...).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

// Latin hypercube sample of n points in [0,1]^d, one row per point.
Mat latin_hypercube(int n, int d, Rng& rng);
// Best of `candidates` Latin hypercubes under the maximin distance criterion.
Mat maximin_lhs(int n, int d, Rng& rng, int candidates = 200);
// Smallest pairwise Euclidean distance between rows.
double min_distance(const MatRef& X);

// n evenly spaced points on [0,1] including both ends (a single point sits at 0.5).
Vec unit_grid(int n);
// Full tensor grid with `per_dim` points per dimension.
Mat tensor_grid(int per_dim, int d);

}  // namespace hetdoe
