#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "slowscat/dirac.hpp"
#include "slowscat/eigen.hpp"
#include "slowscat/multilinear.hpp"
#include "slowscat/potential.hpp"
#include "slowscat/spectral.hpp"
#include "slowscat/waveop.hpp"

using namespace slowscat;
using spectral::uniform_grid;

static void BM_WeylM(benchmark::State& state) {
    const auto V = make_power_decay(1.0, 0.6);
    for (auto _ : state) benchmark::DoNotOptimize(eigen::weyl_m(V, cplx(1.0, 0.01)));
}
BENCHMARK(BM_WeylM)->Unit(benchmark::kMillisecond);

static void BM_SeriesSolution(benchmark::State& state) {
    const auto V = make_bump(1.0, 0.0, 2.0);
    const auto x = uniform_grid(0.0, 4.0, 41);
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(eigen::solve_series(V, x, cplx(1.0, 0.1), N, 1e-15));
}
BENCHMARK(BM_SeriesSolution)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_JostSolution(benchmark::State& state) {
    const auto V = make_power_decay(1.0, 0.6);
    const auto x = uniform_grid(0.0, 50.0, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(eigen::jost_solution(V, 1.0, x));
}
BENCHMARK(BM_JostSolution)->Arg(101)->Arg(1001)->Unit(benchmark::kMillisecond);

static void BM_ScatteringWholeLine(benchmark::State& state) {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(waveop::scattering_wholeline(V, 1.5));
}
BENCHMARK(BM_ScatteringWholeLine)->Unit(benchmark::kMicrosecond);

static void BM_SpectralBasis(benchmark::State& state) {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    const int r = static_cast<int>(state.range(0));
    const auto x = uniform_grid(0.0, 60.0, 300 * r + 1);
    const auto lam = uniform_grid(0.1, 4.0, 60 * r);
    for (auto _ : state) benchmark::DoNotOptimize(spectral::SpectralBasis(V, x, lam));
}
BENCHMARK(BM_SpectralBasis)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_EvolveV(benchmark::State& state) {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    const auto x = uniform_grid(0.0, 60.0, 601);
    const spectral::SpectralBasis B(V, x, uniform_grid(0.1, 4.0, 120));
    const auto p = spectral::packet_from_coeffs(B, spectral::band_coefficients(B.lambda(), 1.0, 2.0, 20.0));
    for (auto _ : state) benchmark::DoNotOptimize(spectral::evolve_V(B, p, 2.0));
}
BENCHMARK(BM_EvolveV)->Unit(benchmark::kMillisecond);

static void BM_BuildAdapted(benchmark::State& state) {
    ml::Function1D f;
    f.lo = 0.0;
    f.hi = 6.0;
    f.f = [](double x) { return cplx(std::exp(-x)); };
    const int depth = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ml::build_adapted(f, 1.8, depth, ml::AdaptMode::lp));
}
BENCHMARK(BM_BuildAdapted)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_NumericalBound(benchmark::State& state) {
    const auto corpus = ml::random_step_corpus(7, 8, 5);
    for (auto _ : state) {
        for (const auto& s : corpus.samples) benchmark::DoNotOptimize(ml::check_numerical_bound(s, 0.05, 0.1, 1.0));
    }
}
BENCHMARK(BM_NumericalBound)->Unit(benchmark::kMillisecond);

static void BM_DiracScattering(benchmark::State& state) {
    const auto c = dirac::Coupling::from_q(make_bump(1.0, -2.0, 2.0), std::exp(0.3 * I));
    for (auto _ : state) benchmark::DoNotOptimize(dirac::dirac_scattering(c, 1.0));
}
BENCHMARK(BM_DiracScattering)->Unit(benchmark::kMicrosecond);

static void BM_DiracDesign(benchmark::State& state) {
    dirac::DesignOptions opt;
    opt.X = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(dirac::design_embedded(1.0, 1.0, opt));
}
BENCHMARK(BM_DiracDesign)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
