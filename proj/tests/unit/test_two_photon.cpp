#include <cmath>

#include "doctest.h"
#include "photonloc/disorder.hpp"
#include "photonloc/errors.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/two_photon.hpp"

using namespace photonloc;

namespace {
LatticeSpec box(int size) {
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = size;
    return spec;
}
}  // namespace

TEST_SUITE("two-photon") {

TEST_CASE("pair hop acts on each photon separately") {
    HoppingKernel kernel = build_kernel(box(5));
    Eigen::MatrixXd T2 = pair_hop(kernel);
    const Eigen::MatrixXd& A = kernel.matrix;
    REQUIRE(T2.rows() == 25);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
            for (int c = 0; c < 5; ++c)
                for (int d = 0; d < 5; ++d) {
                    double expect = 0;
                    if (b == d) expect += A(a, c);
                    if (a == c) expect += A(b, d);
                    CHECK(T2(a * 5 + b, c * 5 + d) == doctest::Approx(expect));
                }
}

TEST_CASE("block layout of the pair operator") {
    LatticeSpec spec = box(4);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 5, 0);
    ModelParams params;
    params.g = 1.4;
    params.rho0 = 0.6;
    params.omega = 0.9;

    TwoPhotonOperator op = build_two_photon(kernel, field, params);
    const int M = 16;
    REQUIRE(op.H.rows() == 2 * M);
    CHECK((op.H.bottomLeftCorner(M, M) -
           2.0 * params.g * Eigen::MatrixXd::Identity(M, M))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((op.H.bottomRightCorner(M, M) -
           params.omega * Eigen::MatrixXd::Identity(M, M) - 0.5 * op.pair_T)
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    Eigen::VectorXd W = pair_potential(field);
    for (int i = 0; i < M; ++i)
        CHECK(op.pair_diag[i] ==
              doctest::Approx(0.5 * params.g * params.rho0 * (2.0 + W[i])));
}

TEST_CASE("photon exchange commutes with the pair operator") {
    LatticeSpec spec = box(5);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 8, 1);
    ModelParams params;
    params.omega = 0.5;

    TwoPhotonOperator op = build_two_photon(kernel, field, params);
    CHECK(exchange_symmetry_defect(op) == doctest::Approx(0.0).epsilon(1e-14));

    // breaking one pair entry must show up in the defect
    op.H(0 * 5 + 1, 2 * 5 + 0) += 0.1;
    CHECK(exchange_symmetry_defect(op) > 0.01);
}

TEST_CASE("real pair eigenvalues pin the scalar effective pencil") {
    LatticeSpec spec = box(5);
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 13, 2);
    ModelParams params;
    params.omega = 1.0;

    TwoPhotonEquivalence eq = two_photon_equivalence(kernel, field, params);
    REQUIRE(!eq.energies.empty());
    CHECK(eq.nonreal_fraction >= 0.0);
    CHECK(eq.nonreal_fraction < 1.0);
    for (std::size_t i = 0; i < eq.energies.size(); ++i) {
        CHECK(eq.smin_effective[i] < 1e-8 * eq.effective_norm[i]);
        CHECK(eq.reconstruction[i] < 1e-8);
    }
}

TEST_CASE("pair relation kernel combines hop and its square") {
    HoppingKernel kernel = build_kernel(box(4));
    Eigen::MatrixXd T2 = pair_hop(kernel);
    const double mu = 1.7, omega = 0.4;
    Eigen::MatrixXd K = pair_relation_kernel(T2, mu, omega);
    Eigen::MatrixXd expect = (mu - 2.0 * omega) * T2 - T2 * T2;
    CHECK((K - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pair constants reproduce their reference values") {
    // reference values computed independently with an extended-aperture
    // asymptotic completion of the lag sums
    PairKernelConstants c12 = pair_kernel_constants(SymbolVariant::FullAngle, 12, 0.9);
    CHECK(c12.c1.total == doctest::Approx(5.46268002).epsilon(2e-4));
    CHECK(c12.c2.total == doctest::Approx(21.28691663).epsilon(2e-4));

    PairKernelConstants c16 = pair_kernel_constants(SymbolVariant::FullAngle, 16, 0.9);
    CHECK(c16.c1.total == doctest::Approx(5.46239013).epsilon(2e-4));
    CHECK(c16.c2.total == doctest::Approx(21.28539427).epsilon(2e-4));

    CHECK(c12.c1.box_value < c12.c1.total);
    CHECK(c12.c2.box_value < c12.c2.total);
}

TEST_CASE("band opens only above the coupling threshold") {
    PairKernelConstants constants =
        pair_kernel_constants(SymbolVariant::FullAngle, 16, 0.9);

    ModelParams weak;
    weak.g = 1.0;  // g^2 rho0 = 1 far below threshold
    weak.omega = 1.0;
    TwoPhotonBand none = two_photon_band(weak, 0.9, constants);
    CHECK(none.threshold ==
          doctest::Approx(std::pow(constants.c2.total, 1.0 / 0.9) / 2.0));
    CHECK(none.threshold == doctest::Approx(14.949144388699036).epsilon(1e-3));
    CHECK_FALSE(none.has_band);

    const double K = none.threshold;
    const double expected_radius[3] = {0.310488232923934, 3.863175209727153,
                                       12.44629717236637};
    const double factor[3] = {1.1, 2.0, 4.0};
    double prev = 0;
    for (int i = 0; i < 3; ++i) {
        ModelParams params;
        params.g = std::sqrt(factor[i] * K);
        params.rho0 = 1.0;
        params.omega = 1.0;
        TwoPhotonBand band = two_photon_band(params, 0.9, constants);
        CHECK(band.has_band);
        CHECK(band.center == doctest::Approx(2.0 * params.omega));
        CHECK(band.radius == doctest::Approx(expected_radius[i]).epsilon(5e-3));
        CHECK(band.radius > prev);
        prev = band.radius;
    }
}

TEST_CASE("constants reject orders where the lag sums diverge") {
    CHECK_THROWS_AS(pair_kernel_constants(SymbolVariant::FullAngle, 12, 0.5),
                    std::domain_error);
    CHECK_THROWS_AS(pair_kernel_constants(SymbolVariant::FullAngle, 2, 0.9),
                    std::invalid_argument);
}

TEST_CASE("pair operator respects the dense budget") {
    LatticeSpec spec = box(68);  // 4624 pair sites, doubled exceeds the budget
    HoppingKernel kernel = build_kernel(spec);
    DisorderField field = sample_field(spec, 1, 0);
    ModelParams params;
    params.omega = 1.0;
    CHECK_THROWS_AS(build_two_photon(kernel, field, params), BudgetExceeded);
}

}  // TEST_SUITE
