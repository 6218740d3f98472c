#pragma once

// Data behind the illustrative figures and tables: criterion profiles, rollout
// paths, allocation comparisons, ratio traces and singleton tables. Each
// emitter writes CSV files plus a manifest.json describing them.

#include "hetdoe/harness.hpp"
#include "hetdoe/imspe.hpp"
#include "hetdoe/lookahead.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hetdoe {

// Five-point design under a Gaussian kernel (nu = 1, theta = 0.01) with two
// noise functions that agree at the design points.
struct Fig1Setup {
  Surrogate surrogate;  // noise at the design points is shared by both regimes
  std::function<double(double)> r_high;
  std::function<double(double)> r_low;
  std::function<double(double)> dr_high;
  std::function<double(double)> dr_low;
};
Fig1Setup fig1_setup();

// 21 evenly spaced points with 5 replicates each of the Forrester simulator,
// and a heteroskedastic fit.
struct Fig3Setup {
  HetGP model;
  std::uint64_t seed = 0;
};
Fig3Setup fig3_setup(std::uint64_t seed = 12);

struct FigureOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  long budget = 500;
  int threads = 0;
};

// figure_id: fig1 | fig2 | fig3 | fig4-ratios | table1-style. Returns the
// files written (CSV and the manifest).
std::vector<std::string> replicate_figure(const std::string& figure_id, const std::string& outdir,
                                          const FigureOptions& options = {});

}  // namespace hetdoe
