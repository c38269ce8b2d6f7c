#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "photonloc/disorder.hpp"
#include "photonloc/errors.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/moments.hpp"
#include "photonloc/one_photon.hpp"

using namespace photonloc;

namespace {
LatticeSpec box(int size) {
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = size;
    return spec;
}
}  // namespace

TEST_SUITE("moments") {

TEST_CASE("resolvent column of a diagonal matrix") {
    Eigen::MatrixXd h = Eigen::Vector3d(2.0, 3.0, 5.0).asDiagonal();
    GreensVector g = greens(h, 1, 1.0, 0.0);
    CHECK(g.values[0] == std::complex<double>(0.0, 0.0));
    CHECK(g.values[1].real() == doctest::Approx(0.5));
    CHECK(g.values[1].imag() == doctest::Approx(0.0));
    CHECK(g.residual < 1e-13);

    GreensVector gc = greens(h, 0, 1.0, 0.5);
    // (2 - 1 - 0.5i)^{-1} = (1 + 0.5i)/1.25
    CHECK(gc.values[0].real() == doctest::Approx(0.8));
    CHECK(gc.values[0].imag() == doctest::Approx(0.4));
}

TEST_CASE("resolvent refuses an exactly singular energy") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(greens(h, 0, 1.0, 0.0), SingularAtE);
    CHECK_NOTHROW(greens(h, 0, 1.0, 1e-3));
}

TEST_CASE("site resolvent is an exact Mobius map of one potential entry") {
    LatticeSpec spec = box(21);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 17, 0);
    ModelParams params;
    params.g = 2.0;
    params.omega = 0.0;

    // even distances from the source: the full-angle kernel only couples
    // sites of equal parity, so odd-distance resolvents vanish identically
    for (int x : {4, 10, 16}) {
        KreinCheck check =
            krein_dependence_check(kernel, field, params, 0.05, 0.05, 10, x);
        REQUIRE_FALSE(check.degenerate);
        CHECK(check.max_deviation < 1e-6);
        CHECK(std::isfinite(check.alpha.real()));
        CHECK(std::isfinite(check.beta.real()));
    }
}

TEST_CASE("sum over sites blows up quadratically at an eigenvalue") {
    Eigen::MatrixXd h(2, 2);
    h << 1.0, 0.0, 0.0, 2.0;
    std::vector<double> eps = {1e-2, 1e-3, 1e-4};
    SimonWolffReport at = simon_wolff_sum(h, 0, 1.0, eps);
    CHECK(at.growth_exponent == doctest::Approx(2.0).epsilon(1e-3));
    CHECK_FALSE(at.bounded);

    SimonWolffReport off = simon_wolff_sum(h, 0, 1.5, eps);
    CHECK(std::abs(off.growth_exponent) < 0.01);
    CHECK(off.bounded);
}

TEST_CASE("epsilon ladder must decrease") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(simon_wolff_sum(h, 0, 0.5, {1e-3, 1e-2}),
                    std::invalid_argument);
}

TEST_CASE("tail survival of an inverse uniform variable obeys the linear bound") {
    // with V uniform on [-1,1], |1/V| survives level t with probability 1/t,
    // safely below 4 sqrt(2)/t
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> vdist(-1.0, 1.0);
    std::vector<std::complex<double>> gs;
    for (int i = 0; i < 4096; ++i) gs.emplace_back(1.0 / vdist(rng), 0.0);

    WegnerTailCheck check = wegner_tail_check(gs, 1.0);
    CHECK(check.passed);
    REQUIRE(check.thresholds.size() > 4);
    CHECK(check.bound[0] == doctest::Approx(4.0 * std::sqrt(2.0)));

    // an eightfold weaker constant is beaten by the actual tail
    WegnerTailCheck fail = wegner_tail_check(gs, 8.0);
    CHECK_FALSE(fail.passed);
}

TEST_CASE("tail check input validation") {
    std::vector<std::complex<double>> few(100, {1.0, 0.0});
    CHECK_THROWS_AS(wegner_tail_check(few, 1.0), std::invalid_argument);
    std::vector<std::complex<double>> enough(512, {1.0, 0.0});
    CHECK_THROWS_AS(wegner_tail_check(enough, 0.0), std::domain_error);
}

TEST_CASE("ensemble total equals the distance profile resum") {
    MomentReport report = moment_ensemble(box(21), SymbolVariant::FullAngle,
                                          []() {
                                              ModelParams p;
                                              p.g = 2.0;
                                              return p;
                                          }(),
                                          0.05, 0.05, 0.9, 1e-3, 64, 99, 1);
    CHECK(report.realizations == 64);
    CHECK(report.failures == 0);
    double resum = 0;
    for (std::size_t i = 0; i < report.moment.size(); ++i)
        resum += report.moment[i] * report.site_count[i];
    CHECK(resum == doctest::Approx(report.xi_hat).epsilon(1e-12));
    CHECK(report.xi_hat > 0);
    CHECK(report.xi_hat_se > 0);
    int total_sites = 0;
    for (int c : report.site_count) total_sites += c;
    CHECK(total_sites == 21);
}

TEST_CASE("ensemble output does not depend on the worker count") {
    auto run = [](int workers) {
        ModelParams params;
        params.g = 2.0;
        return moment_ensemble(box(15), SymbolVariant::FullAngle, params, 0.05,
                               0.05, 0.9, 1e-3, 64, 5, workers);
    };
    MomentReport serial = run(1);
    MomentReport threaded = run(3);
    CHECK(serial.xi_hat == threaded.xi_hat);
    CHECK(serial.xi_hat_se == threaded.xi_hat_se);
    CHECK(serial.slope == threaded.slope);
    REQUIRE(serial.moment.size() == threaded.moment.size());
    for (std::size_t i = 0; i < serial.moment.size(); ++i)
        CHECK(serial.moment[i] == threaded.moment[i]);
}

TEST_CASE("ensemble insists on enough realizations for its blocks") {
    ModelParams params;
    CHECK_THROWS_AS(moment_ensemble(box(15), SymbolVariant::FullAngle, params,
                                    0.5, 0.5, 0.9, 1e-3, 32, 5, 1),
                    std::invalid_argument);
}

TEST_CASE("localization bound verdict arithmetic") {
    MomentReport report;
    report.xi_hat = 2.0;
    report.xi_hat_se = 0.1;
    XiBoundVerdict v = xi_bound_check(report, 1.0, 0.5);
    CHECK(v.bound == doctest::Approx(2.0 + 0.3));
    CHECK(v.verdict);
    CHECK_THROWS_AS(xi_bound_check(report, 1.0, 1.5), std::domain_error);
}

}  // TEST_SUITE
