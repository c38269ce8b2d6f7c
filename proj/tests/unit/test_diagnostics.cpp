#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "photonloc/diagnostics.hpp"
#include "photonloc/disorder.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/linalg.hpp"
#include "photonloc/one_photon.hpp"

using namespace photonloc;

namespace {
constexpr double kPi = std::numbers::pi;

LatticeSpec ring(int size) {
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = size;
    spec.boundary = Boundary::PeriodicSymbol;
    return spec;
}
}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("participation ratio extremes") {
    const int N = 25;
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(N, 1.0 / std::sqrt(double(N)));
    CHECK(ipr(flat) == doctest::Approx(1.0 / N).epsilon(1e-12));

    Eigen::VectorXd peak = Eigen::VectorXd::Zero(N);
    peak[7] = 1.0;
    CHECK(ipr(peak) == doctest::Approx(1.0));

    std::mt19937 rng(4);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd random(N);
    for (int i = 0; i < N; ++i) random[i] = gauss(rng);
    random.normalize();
    const double v = ipr(random);
    CHECK(v >= 1.0 / N);
    CHECK(v <= 1.0);
}

TEST_CASE("envelope fit recovers a planted decay length") {
    const int N = 101;
    const double xi = 7.0;
    Eigen::VectorXd profile(N);
    for (int x = 0; x < N; ++x)
        profile[x] = std::exp(-std::abs(x - 50) / xi);
    LocalizationFit fit = localization_length(profile);
    CHECK(fit.accepted);
    CHECK(fit.r_squared > 0.999);
    CHECK(fit.xi == doctest::Approx(xi).epsilon(1e-6));
}

TEST_CASE("flat profiles are rejected, not fitted") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(64, 0.125);
    LocalizationFit fit = localization_length(flat);
    CHECK_FALSE(fit.accepted);
}

TEST_CASE("equal spacings give unit gap ratios") {
    std::vector<double> levels;
    for (int i = 0; i < 60; ++i) levels.push_back(0.5 * i);
    std::vector<double> ratios = spacing_ratios(levels);
    REQUIRE(ratios.size() == 58);
    for (double r : ratios) CHECK(r == doctest::Approx(1.0));
}

TEST_CASE("poisson levels reproduce the known mean gap ratio") {
    std::mt19937 rng(2718);
    std::exponential_distribution<double> gap(1.0);
    std::vector<double> levels;
    double x = 0;
    for (int i = 0; i < 50000; ++i) {
        x += gap(rng);
        levels.push_back(x);
    }
    const double r = r_statistic(spacing_ratios(levels));
    CHECK(r == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(0.02));
}

TEST_CASE("gap statistic needs a minimal sample") {
    std::vector<double> few(20, 1.0);
    CHECK_THROWS_AS(r_statistic(few), std::invalid_argument);
}

TEST_CASE("eigenstate scan fills aligned diagnostics") {
    LatticeSpec spec = ring(32);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 12, 0);
    ModelParams params;
    params.omega = 1.0;
    SpectralResult sp = spectrum_symmetric(build_one_photon(kernel, field, params).H);

    EigenstateDiagnostics diag = analyze_eigenstates(sp, spec, -10.0, 10.0);
    REQUIRE(diag.energy.size() == 64);
    REQUIRE(diag.ipr_value.size() == diag.energy.size());
    REQUIRE(diag.xi.size() == diag.energy.size());
    REQUIRE(diag.fit_accepted.size() == diag.energy.size());
    for (double v : diag.ipr_value) {
        CHECK(v > 0);
        CHECK(v <= 1.0);
    }

    EigenstateDiagnostics none = analyze_eigenstates(sp, spec, 100.0, 200.0);
    CHECK(none.energy.empty());
}

TEST_CASE("clean evolution stays unitary and follows the two level formula") {
    const int L = 16, j = 3;
    LatticeSpec spec = ring(L);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField clean = field_from_values(spec, Eigen::VectorXd::Zero(L));
    ModelParams params;
    params.g = 0.9;
    params.rho0 = 1.2;
    params.omega = 0.7;
    OnePhotonOperator op = build_one_photon(kernel, clean, params);

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(2 * L);
    const double k = 2.0 * kPi * j / L;
    for (int x = 0; x < L; ++x)
        psi0[x] = std::polar(1.0 / std::sqrt(double(L)), k * x);

    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.25 * i);
    EvolutionTrace trace = evolve(op.H, spec, psi0, times);
    CHECK_FALSE(trace.used_expm);

    const double w = std::sqrt(symbol_h(SymbolVariant::FullAngle, &k, 1));
    const double det = w - params.omega;
    const double rabi = std::sqrt(det * det + 4.0 * params.coupling_sq());
    const double depth = 4.0 * params.coupling_sq() / (rabi * rabi);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(std::abs(trace.total_norm[i] - 1.0) < 1e-12);
        const double sn = std::sin(0.5 * rabi * times[i]);
        const double expect = 1.0 - depth * sn * sn;
        CHECK(trace.photon_probability[i] ==
              doctest::Approx(expect).epsilon(1e-8));
        CHECK(trace.photon_probability[i] + trace.atom_probability[i] ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("defective generators fall back to stepped exponentials") {
    // nilpotent upper triangular block: exp(-itH) = I - itH exactly
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = 1;
    Eigen::MatrixXd H(2, 2);
    H << 0, 1, 0, 0;
    Eigen::VectorXcd psi0(2);
    psi0 << 0.0, 1.0;
    std::vector<double> times = {0.0, 0.5, 1.0, 2.0};
    EvolutionTrace trace = evolve(H, spec, psi0, times);
    CHECK(trace.used_expm);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        CHECK(trace.photon_probability[i] == doctest::Approx(t * t).epsilon(1e-10));
        CHECK(trace.total_norm[i] ==
              doctest::Approx(std::sqrt(1.0 + t * t)).epsilon(1e-10));
    }
}

TEST_CASE("evolution rejects malformed inputs") {
    LatticeSpec spec = ring(4);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(8, 8);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(8);
    psi0[0] = 1.0;
    CHECK_THROWS_AS(evolve(H, spec, psi0, {1.0, 0.5}), std::invalid_argument);
    Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(6);
    CHECK_THROWS_AS(evolve(H, spec, bad, {0.0, 1.0}), std::invalid_argument);
}

}  // TEST_SUITE
