#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spdelab/det_map.hpp"
#include "spdelab/malliavin.hpp"
#include "spdelab/solver.hpp"

using namespace spdelab;

namespace {

SpaceTimeGrid grid_for(int n_x, int n_t = 512) { return SpaceTimeGrid(1.0, n_t, 8.0, n_x); }

void BM_SemigroupApply(benchmark::State& state) {
  const auto g = grid_for(static_cast<int>(state.range(0)));
  HeatSemigroup S(g);
  std::vector<double> v(static_cast<std::size_t>(g.n_x()), 0.0), out(v.size());
  v[v.size() / 2] = 1.0;
  for (auto _ : state) {
    S.apply(v, g.dt(), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * g.n_x());
}
BENCHMARK(BM_SemigroupApply)->RangeMultiplier(4)->Range(64, 4096);

void BM_SampleNoise(benchmark::State& state) {
  const auto g = grid_for(static_cast<int>(state.range(0)));
  NoiseCovariance cov(g, state.range(1) ? CovarianceSpec::gaussian(1.0, 0.25) : CovarianceSpec::white(0.25));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_noise(g, cov, seed++));
}
BENCHMARK(BM_SampleNoise)->Args({256, 0})->Args({256, 1})->Args({1024, 1})->Unit(benchmark::kMillisecond);

void BM_Resolvent(benchmark::State& state) {
  const auto f = state.range(0) ? ReactionFn::exponential() : ReactionFn::allen_cahn();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> xs(1024);
  for (auto& x : xs) x = u(rng);
  for (auto _ : state)
    for (double x : xs) benchmark::DoNotOptimize(resolvent(f, 1.0 / 512, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(xs.size()));
}
BENCHMARK(BM_Resolvent)->Arg(0)->Arg(1);

void BM_ApplyM(benchmark::State& state) {
  const auto g = grid_for(256);
  const auto z = random_smooth_field(g, 1);
  HeatSemigroup S(g);
  const auto f = ReactionFn::allen_cahn();
  MapSolveOptions opt;
  opt.scheme = state.range(0) ? DriftScheme::yosida_ladder : DriftScheme::semi_implicit;
  for (auto _ : state) benchmark::DoNotOptimize(apply_M(z, f, S, opt));
}
BENCHMARK(BM_ApplyM)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveDirect(benchmark::State& state) {
  const auto g = grid_for(static_cast<int>(state.range(0)));
  HeatSemigroup S(g);
  NoiseCovariance cov(g, CovarianceSpec::white(0.25));
  const auto path = sample_noise(g, cov, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        solve_direct(ReactionFn::allen_cahn(), Diffusion::sine(), InitialCondition::constant(0.0), path, S));
}
BENCHMARK(BM_SolveDirect)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PicardSolve(benchmark::State& state) {
  const auto g = grid_for(256);
  HeatSemigroup S(g);
  NoiseCovariance cov(g, CovarianceSpec::white(0.25));
  const auto path = sample_noise(g, cov, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        picard_solve(ReactionFn::allen_cahn(), Diffusion::sine(), InitialCondition::constant(0.0), path, S));
}
BENCHMARK(BM_PicardSolve)->Unit(benchmark::kMillisecond);

void BM_DirectionalDerivative(benchmark::State& state) {
  const auto g = grid_for(256, 256);
  HeatSemigroup S(g);
  NoiseCovariance cov(g, CovarianceSpec::white(0.25));
  const auto path = sample_noise(g, cov, 7);
  const auto f = ReactionFn::allen_cahn();
  const auto sigma = Diffusion::sine();
  const auto u = solve_direct(f, sigma, InitialCondition::constant(0.0), path, S);
  const auto probe = make_probe(g, 0.5, 0.0, 0.125, S);
  for (auto _ : state) benchmark::DoNotOptimize(solve_directional_derivative(u, path, probe, f, sigma, cov, S));
}
BENCHMARK(BM_DirectionalDerivative)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
