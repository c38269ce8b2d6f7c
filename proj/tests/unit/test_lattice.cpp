#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "photonloc/errors.hpp"
#include "photonloc/lattice.hpp"

using namespace photonloc;

namespace {
constexpr double kPi = std::numbers::pi;

LatticeSpec line(int size, Boundary b = Boundary::TruncatedKernel, int os = 0) {
    LatticeSpec spec;
    spec.dim = 1;
    spec.size = size;
    spec.boundary = b;
    spec.oversample = os;
    return spec;
}
}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("site index round trip in every dimension") {
    std::mt19937 rng(3);
    for (int dim = 1; dim <= 3; ++dim) {
        LatticeSpec spec;
        spec.dim = dim;
        spec.size = 7;
        std::uniform_int_distribution<int> coord(0, spec.size - 1);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> x(dim);
            for (int& v : x) v = coord(rng);
            const int idx = site_index(spec, x);
            CHECK(site_coords(spec, idx) == x);
        }
    }
}

TEST_CASE("coordinates are rejected outside the box") {
    LatticeSpec spec = line(5);
    CHECK_THROWS_AS(site_index(spec, {5}), std::invalid_argument);
    CHECK_THROWS_AS(site_index(spec, {-1}), std::invalid_argument);
    CHECK_THROWS_AS(site_index(spec, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(site_coords(spec, 5), std::invalid_argument);
}

TEST_CASE("centered coordinates put the origin mid box") {
    CHECK(centered_coord(2, 5) == 0);
    CHECK(centered_coord(0, 5) == -2);
    CHECK(centered_coord(4, 5) == 2);
    CHECK(centered_coord(1, 4) == 0);  // even boxes lean left of centre
}

TEST_CASE("spec validation catches bad shapes") {
    LatticeSpec spec = line(8);
    spec.dim = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.dim = 4;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = line(0);
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = line(8, Boundary::TruncatedKernel, 16);  // below the 4x floor
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("dispersion magnitude at reference momenta") {
    double k = kPi / 2.0;
    CHECK(symbol_h(SymbolVariant::FullAngle, &k, 1) == doctest::Approx(4.0));
    k = kPi;
    CHECK(symbol_h(SymbolVariant::HalfAngle, &k, 1) == doctest::Approx(4.0));
    CHECK(symbol_h(SymbolVariant::FullAngle, &k, 1) ==
          doctest::Approx(0.0).epsilon(1e-24));
    double kk[2] = {kPi / 2.0, kPi / 2.0};
    CHECK(symbol_h(SymbolVariant::FullAngle, kk, 2) == doctest::Approx(8.0));
}

TEST_CASE("hop amplitudes converge to the known harmonics") {
    // dual-grid sampling converges quadratically: the aliasing remainder of
    // the n-th coefficient is the sum over lags n + jM of -(4/pi)/(4m^2-1)
    // terms, which for n << M is -(4 pi / 3) / M^2 to leading order
    for (int os_factor : {8, 32}) {
        const int L = 16;
        HoppingKernel kernel =
            build_kernel(line(L, Boundary::TruncatedKernel, os_factor * L));
        const int M = os_factor * L;
        const double slack = 4.5 / (M * double(M));
        CHECK(std::abs(kernel.displacement_entry({0}) - 4.0 / kPi) < slack);
        CHECK(std::abs(kernel.displacement_entry({2}) + 4.0 / (3.0 * kPi)) <
              slack);
        CHECK(std::abs(kernel.displacement_entry({4}) + 4.0 / (15.0 * kPi)) <
              slack);
    }
}

TEST_CASE("full-angle kernel only couples sites of equal parity") {
    HoppingKernel kernel = build_kernel(line(16));
    for (int n = 1; n < 16; n += 2)
        CHECK(std::abs(kernel.displacement_entry({n})) < 1e-13);
    // the half-angle variant has no such symmetry: its first lag matches the
    // full-angle second harmonic value
    HoppingKernel half = build_kernel(line(16), SymbolVariant::HalfAngle);
    CHECK(half.displacement_entry({1}) ==
          doctest::Approx(-4.0 / (3.0 * kPi)).epsilon(1e-3));
}

TEST_CASE("kernel matrix is symmetric with constant diagonal") {
    for (SymbolVariant v : {SymbolVariant::FullAngle, SymbolVariant::HalfAngle}) {
        HoppingKernel kernel = build_kernel(line(12), v);
        CHECK((kernel.matrix - kernel.matrix.transpose()).cwiseAbs().maxCoeff() ==
              0.0);
        for (int i = 0; i < 12; ++i)
            CHECK(kernel.matrix(i, i) == kernel.matrix(0, 0));
    }
}

TEST_CASE("periodic kernel is circulant and diagonalized by its own symbol") {
    const int L = 12;
    HoppingKernel kernel = build_kernel(line(L, Boundary::PeriodicSymbol));
    for (int r = 1; r < L; ++r)
        for (int c = 0; c < L; ++c)
            CHECK(kernel.matrix(r, c) ==
                  doctest::Approx(kernel.matrix(0, (c - r + L) % L))
                      .epsilon(1e-14));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel.matrix);
    std::vector<double> expected;
    for (int j = 0; j < L; ++j) {
        double k = 2.0 * kPi * j / L;
        expected.push_back(std::sqrt(symbol_h(SymbolVariant::FullAngle, &k, 1)));
    }
    std::sort(expected.begin(), expected.end());
    for (int j = 0; j < L; ++j)
        CHECK(es.eigenvalues()[j] == doctest::Approx(expected[j]).epsilon(1e-12));
}

TEST_CASE("squared periodic kernel is the short range second difference") {
    // the full-angle symbol squares to 2 - 2 cos(2k), so T^2 on the ring has
    // exactly three nonzero circulant entries: 2 at lag 0 and -1 at lag +-2
    const int L = 12;
    HoppingKernel kernel = build_kernel(line(L, Boundary::PeriodicSymbol));
    Eigen::MatrixXd T2 = kernel.matrix * kernel.matrix;
    for (int c = 0; c < L; ++c) {
        double expect = 0.0;
        if (c == 0) expect = 2.0;
        if (c == 2 || c == L - 2) expect = -1.0;
        CHECK(T2(0, c) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("multidimensional transform agrees with the brute force sum") {
    // the axis by axis cascade must match a direct double sum over the dual
    // grid; the symbol does not factor over axes so this is a real check
    const int M = 24, A = 3;
    std::vector<double> fast =
        displacement_table(SymbolVariant::FullAngle, 2, A, M);
    for (int n0 = 0; n0 <= A; ++n0)
        for (int n1 = 0; n1 <= A; ++n1) {
            double direct = 0;
            for (int j0 = 0; j0 < M; ++j0)
                for (int j1 = 0; j1 < M; ++j1) {
                    double kv[2] = {2.0 * kPi * j0 / M, 2.0 * kPi * j1 / M};
                    direct += std::sqrt(symbol_h(SymbolVariant::FullAngle, kv, 2)) *
                              std::cos(kv[0] * n0) * std::cos(kv[1] * n1);
                }
            direct /= double(M) * M;
            CHECK(fast[static_cast<std::size_t>(n0) * (A + 1) + n1] ==
                  doctest::Approx(direct).epsilon(1e-12));
        }
}

TEST_CASE("displacement entries vanish beyond the aperture") {
    HoppingKernel kernel = build_kernel(line(8));
    CHECK(kernel.aperture == 7);
    CHECK(kernel.displacement_entry({8}) == 0.0);
    CHECK(kernel.displacement_entry({-8}) == 0.0);
    CHECK(kernel.displacement_entry({-6}) == kernel.displacement_entry({6}));
}

TEST_CASE("dense budget rejects oversized boxes before allocation") {
    LatticeSpec spec;
    spec.dim = 2;
    spec.size = 91;  // 8281 sites, just over the dense budget
    CHECK_THROWS_AS(build_kernel(spec), BudgetExceeded);
}

TEST_CASE("row s-sum splits into box value and tail bound") {
    HoppingKernel kernel = build_kernel(line(32));
    SNormReport rep = kernel_s_norm(kernel, 0.9);
    CHECK(rep.box_value > 0);
    CHECK(rep.tail_bound > 0);
    CHECK(rep.total == doctest::Approx(rep.box_value + rep.tail_bound));
    // a larger box converts tail into box value without exceeding the bound
    HoppingKernel big = build_kernel(line(256));
    SNormReport brep = kernel_s_norm(big, 0.9);
    CHECK(brep.box_value > rep.box_value);
    CHECK(brep.box_value < rep.total);
    CHECK(brep.total < rep.total);
}

TEST_CASE("tail bound is conservative but not wasteful") {
    // compare the analytic tail bound of a small box against the tail mass a
    // much larger box actually picks up; the bound must cover it and stay
    // within a modest constant factor
    HoppingKernel small = build_kernel(line(16));
    HoppingKernel large = build_kernel(line(1024));
    const double s = 0.9;
    SNormReport srep = kernel_s_norm(small, s);
    SNormReport lrep = kernel_s_norm(large, s);
    const double seen_tail = lrep.box_value - srep.box_value;
    CHECK(seen_tail > 0);
    CHECK(srep.tail_bound > seen_tail);
    CHECK(srep.tail_bound < 4.2 * seen_tail);
}

TEST_CASE("row s-sum diverges at or below the critical order") {
    HoppingKernel kernel = build_kernel(line(8));
    CHECK_THROWS_AS(kernel_s_norm(kernel, 0.5), std::domain_error);
    CHECK_NOTHROW(kernel_s_norm(kernel, 0.51));
}

}  // TEST_SUITE
