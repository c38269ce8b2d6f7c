// microbenchmarks for the hot paths: kernel assembly, dense spectra, resolvent
// solves and the decoupling search.  Run ./photonloc_bench --benchmark_filter=...

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "photonloc/decoupling.hpp"
#include "photonloc/disorder.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/linalg.hpp"
#include "photonloc/moments.hpp"
#include "photonloc/one_photon.hpp"
#include "photonloc/two_photon.hpp"

namespace {

using namespace photonloc;

LatticeSpec line(int size) {
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = size;
    spec.boundary = Boundary::TruncatedKernel;
    return spec;
}

void bm_kernel_1d(benchmark::State& state) {
    LatticeSpec spec = line(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        HoppingKernel kernel = build_kernel(spec);
        benchmark::DoNotOptimize(kernel.matrix.data());
    }
}
BENCHMARK(bm_kernel_1d)->Arg(64)->Arg(256)->Arg(1024);

void bm_kernel_2d(benchmark::State& state) {
    LatticeSpec spec;
    spec.dim = 2;
    spec.size = static_cast<int>(state.range(0));
    spec.boundary = Boundary::TruncatedKernel;
    for (auto _ : state) {
        HoppingKernel kernel = build_kernel(spec);
        benchmark::DoNotOptimize(kernel.matrix.data());
    }
}
BENCHMARK(bm_kernel_2d)->Arg(16)->Arg(32);

void bm_s_norm(benchmark::State& state) {
    HoppingKernel kernel = build_kernel(line(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        SNormReport report = kernel_s_norm(kernel, 0.9);
        benchmark::DoNotOptimize(report.total);
    }
}
BENCHMARK(bm_s_norm)->Arg(64)->Arg(256);

void bm_spectrum_symmetric(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    LatticeSpec spec = line(L);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 1, 0);
    ModelParams params;
    params.omega = 1.0;
    OnePhotonOperator op = build_one_photon(kernel, field, params);
    for (auto _ : state) {
        SpectralResult sp = spectrum_symmetric(op.H);
        benchmark::DoNotOptimize(sp.eigenvalues.data());
    }
}
BENCHMARK(bm_spectrum_symmetric)->Arg(64)->Arg(128)->Arg(256);

void bm_greens_solve(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    LatticeSpec spec = line(L);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 1, 0);
    ModelParams params;
    params.g = 2.0;
    EffectiveOperator eff = build_effective(kernel, field, params, 0.05);
    for (auto _ : state) {
        GreensVector g = greens(eff.H, L / 2, 0.05, 1e-3);
        benchmark::DoNotOptimize(g.values.data());
    }
}
BENCHMARK(bm_greens_solve)->Arg(201)->Arg(401);

void bm_smallest_singular(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    LatticeSpec spec = line(L);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 3, 0);
    ModelParams params;
    params.omega = 1.0;
    OnePhotonOperator op = build_one_photon(kernel, field, params);
    Eigen::MatrixXd shifted =
        op.H - 0.37 * Eigen::MatrixXd::Identity(2 * L, 2 * L);
    for (auto _ : state) {
        double smin = smallest_singular_value(shifted);
        benchmark::DoNotOptimize(smin);
    }
}
BENCHMARK(bm_smallest_singular)->Arg(32)->Arg(64);

void bm_theta_estimate(benchmark::State& state) {
    for (auto _ : state) {
        ThetaEstimate est = theta_s_estimate(0.9, 1.0);
        benchmark::DoNotOptimize(est.theta_hat);
    }
}
BENCHMARK(bm_theta_estimate);

void bm_pair_hop(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    HoppingKernel kernel = build_kernel(line(L));
    for (auto _ : state) {
        Eigen::MatrixXd t2 = pair_hop(kernel);
        benchmark::DoNotOptimize(t2.data());
    }
}
BENCHMARK(bm_pair_hop)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
