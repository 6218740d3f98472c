#include "hetdoe/hetgp.hpp"
#include "hetdoe/imspe.hpp"
#include "hetdoe/lookahead.hpp"
#include "hetdoe/sampling.hpp"
#include "hetdoe/testbed.hpp"

#include <benchmark/benchmark.h>

using namespace hetdoe;

namespace {

// Forrester data: n unique inputs with three replicates each.
UniqueDesign forrester_design(int n, std::uint64_t seed = 1) {
  Rng rng(seed);
  const ForresterSimulator sim;
  const Mat X = latin_hypercube(n, 1, rng);
  UniqueDesign d(1);
  for (int i = 0; i < n; ++i) {
    const Vec x = X.row(i).transpose();
    const int k = d.append(x, sim.eval(x, rng));
    for (int j = 0; j < 2; ++j) d.add_to(k, sim.eval(x, rng));
  }
  return d;
}

Surrogate surrogate(int n, KernelFamily f = KernelFamily::Gaussian) {
  const UniqueDesign d = forrester_design(n);
  return Surrogate(KernelSpec::isotropic(f, 1, 0.1), d, Vec::Constant(n, 0.3));
}

void BM_WMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const KernelSpec k = KernelSpec::isotropic(KernelFamily::Matern52, 2, 0.2);
  const Mat X = latin_hypercube(n, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(w_matrix(k, X));
}
BENCHMARK(BM_WMatrix)->Arg(50)->Arg(200);

void BM_ImspeNextGrad(benchmark::State& state) {
  const Surrogate s = surrogate(static_cast<int>(state.range(0)));
  const Vec x = Vec::Constant(1, 0.37), dr = Vec::Zero(1);
  Vec g;
  for (auto _ : state) benchmark::DoNotOptimize(imspe_next_grad(s, x, 0.3, dr, g));
}
BENCHMARK(BM_ImspeNextGrad)->Arg(50)->Arg(200)->Arg(500);

void BM_ExtendNewLocation(benchmark::State& state) {
  const Surrogate s = surrogate(static_cast<int>(state.range(0)));
  const Vec x = Vec::Constant(1, 0.37);
  for (auto _ : state) benchmark::DoNotOptimize(s.extend_new_location(x, 0.3, 0.0));
}
BENCHMARK(BM_ExtendNewLocation)->Arg(50)->Arg(200)->Arg(500);

void BM_OptimizeNext(benchmark::State& state) {
  const Surrogate s = surrogate(static_cast<int>(state.range(0)));
  const NoiseFunction noise = constant_noise(0.3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_next(s, noise, SearchOptions{}));
}
BENCHMARK(BM_OptimizeNext)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_HetGPFit(benchmark::State& state) {
  const UniqueDesign d = forrester_design(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(HetGP::fit(d, HetGPOptions{}));
}
BENCHMARK(BM_HetGPFit)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Lookahead(benchmark::State& state) {
  const HetGP m = HetGP::fit(forrester_design(40), HetGPOptions{});
  const NoiseFunction noise = m.noise_function();
  const int h = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(choose_next(m.surrogate(), noise, h, LookaheadConfig{}));
}
BENCHMARK(BM_Lookahead)->Arg(0)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
