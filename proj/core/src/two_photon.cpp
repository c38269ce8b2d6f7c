#include "photonloc/two_photon.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "photonloc/errors.hpp"
#include "photonloc/linalg.hpp"

namespace photonloc {

namespace {
void require_same_spec(const HoppingKernel& kernel, const DisorderField& field) {
    if (kernel.spec.dim != field.spec.dim || kernel.spec.size != field.spec.size)
        throw std::invalid_argument("kernel and disorder field use different lattices");
}

void require_off_resonance(double mu, double omega) {
    if (std::abs(mu - omega) <= 1e-12 * std::max(1.0, std::abs(omega)))
        throw MuAtResonance(mu);
}
}  // namespace

Eigen::MatrixXd pair_hop(const HoppingKernel& kernel) {
    const int N = kernel.spec.sites();
    check_dense_budget(N * N, "pair hop");
    const Eigen::MatrixXd& A = kernel.matrix;
    Eigen::MatrixXd T2 = Eigen::MatrixXd::Zero(N * N, N * N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            // (A (x) I) block structure plus (I (x) A) on the diagonal blocks
            T2.block(a * N, b * N, N, N).diagonal().setConstant(A(a, b));
            if (a == b) T2.block(a * N, b * N, N, N) += A;
        }
    return T2;
}

TwoPhotonOperator build_two_photon(const HoppingKernel& kernel,
                                   const DisorderField& field,
                                   const ModelParams& params) {
    require_same_spec(kernel, field);
    params.validate();
    const int N = kernel.spec.sites();
    const int M = N * N;
    check_dense_budget(2 * M, "two-photon operator");

    TwoPhotonOperator op;
    op.sites = N;
    op.pair_T = pair_hop(kernel);
    Eigen::VectorXd W = pair_potential(field);
    op.pair_diag = (params.g * params.rho0 / 2.0) * (2.0 + W.array());

    op.H.setZero(2 * M, 2 * M);
    op.H.topLeftCorner(M, M) = op.pair_T;
    op.H.topRightCorner(M, M) = op.pair_diag.asDiagonal();
    op.H.bottomLeftCorner(M, M) = 2.0 * params.g * Eigen::MatrixXd::Identity(M, M);
    op.H.bottomRightCorner(M, M) =
        params.omega * Eigen::MatrixXd::Identity(M, M) + 0.5 * op.pair_T;
    return op;
}

TwoPhotonEffective build_two_photon_effective(const HoppingKernel& kernel,
                                              const DisorderField& field,
                                              const ModelParams& params, double mu) {
    require_same_spec(kernel, field);
    params.validate();
    require_off_resonance(mu, params.omega);
    const int N = kernel.spec.sites();
    check_dense_budget(N * N, "two-photon effective operator");

    const double om = params.omega;
    Eigen::MatrixXd T2 = pair_hop(kernel);
    Eigen::VectorXd W = pair_potential(field);

    TwoPhotonEffective eff;
    eff.mu = mu;
    // finite-volume convention: the square is taken after restriction, which
    // keeps the block-elimination algebra exact on the box
    eff.H = -(T2 * T2) / (2.0 * (mu - om)) + ((3.0 * mu - 2.0 * om) / (2.0 * (mu - om))) * T2;
    eff.H += ((params.coupling_sq() / (mu - om)) * (2.0 + W.array())).matrix().asDiagonal();
    return eff;
}

TwoPhotonEquivalence two_photon_equivalence(const HoppingKernel& kernel,
                                            const DisorderField& field,
                                            const ModelParams& params) {
    TwoPhotonOperator op = build_two_photon(kernel, field, params);
    const int M = op.sites * op.sites;
    GeneralSpectralResult spec = spectrum_general(op.H);

    TwoPhotonEquivalence out;
    out.hnorm = op.H.cwiseAbs().rowwise().sum().maxCoeff();
    out.nonreal_count = 2 * M - static_cast<int>(spec.real_classified.size());
    out.nonreal_fraction = spec.nonreal_fraction;

    for (int idx : spec.real_classified) {
        const double E = spec.eigenvalues[idx].real();
        if (std::abs(E - params.omega) <= 1e-9 * std::max(1.0, std::abs(params.omega)))
            continue;  // effective family undefined at the resonance
        TwoPhotonEffective eff = build_two_photon_effective(kernel, field, params, E);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            eff.H - E * Eigen::MatrixXd::Identity(M, M));
        int imin = 0;
        es.eigenvalues().cwiseAbs().minCoeff(&imin);
        out.energies.push_back(E);
        out.smin_effective.push_back(std::abs(es.eigenvalues()[imin]));
        out.effective_norm.push_back(eff.H.cwiseAbs().rowwise().sum().maxCoeff());

        // reconstruct the photon-pair amplitude from the pair-sector vector
        Eigen::VectorXd psi = es.eigenvectors().col(imin);
        Eigen::VectorXd phi =
            ((E - params.omega) * psi - 0.5 * (op.pair_T * psi)) / (2.0 * params.g);
        Eigen::VectorXd full(2 * M);
        full << phi, psi;
        const double nrm = full.norm();
        out.reconstruction.push_back(
            nrm > 0 ? (op.H * full - E * full).norm() / nrm : 0.0);
    }
    return out;
}

double exchange_symmetry_defect(const TwoPhotonOperator& op) {
    const int N = op.sites;
    const int M = N * N;
    // permutation (x1,x2) -> (x2,x1) applied blockwise
    Eigen::VectorXi perm(M);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) perm[a * N + b] = b * N + a;
    Eigen::MatrixXd HP(2 * M, 2 * M), PH(2 * M, 2 * M);
    for (int blk = 0; blk < 2; ++blk)
        for (int c = 0; c < M; ++c) {
            HP.middleCols(blk * M, M).col(c) = op.H.col(blk * M + perm[c]);
            PH.middleRows(blk * M, M).row(c) = op.H.row(blk * M + perm[c]);
        }
    return (HP - PH).norm();
}

Eigen::MatrixXd pair_relation_kernel(const Eigen::MatrixXd& pair_T, double mu,
                                     double omega) {
    return (mu - 2.0 * omega) * pair_T - pair_T * pair_T;
}

namespace {

// one-axis displacement row sum of |tau|^s with an extended aperture and a
// decay-model remainder; returns (direct sum over |n| <= aperture incl. 0,
// remainder per side, tau table, fitted c)
struct AxisRow {
    std::vector<double> tau;  // n = 0..aperture
    double direct = 0;        // sum over n in [-aperture, aperture]
    double remainder = 0;     // both sides beyond the aperture
    double c_fit = 0;
};

AxisRow axis_row_sums(SymbolVariant variant, int aperture, double s) {
    AxisRow row;
    row.tau = displacement_table(variant, 1, aperture, 16 * aperture);
    row.direct = std::pow(std::abs(row.tau[0]), s);
    for (int n = 1; n <= aperture; ++n)
        row.direct += 2.0 * std::pow(std::abs(row.tau[n]), s);

    // |tau(n)| n^2 -> c with a 1/n^2 correction; two-point fit on the last two
    // even lags removes the leading model bias
    const int n1 = aperture, n0 = aperture - 2;
    const double f1 = std::abs(row.tau[n1]) * double(n1) * n1;
    const double f0 = std::abs(row.tau[n0]) * double(n0) * n0;
    row.c_fit = (f1 / (double(n0) * n0) - f0 / (double(n1) * n1)) /
                (1.0 / (double(n0) * n0) - 1.0 / (double(n1) * n1));

    // only even lags carry weight for the full-angle symbol; for the half-angle
    // variant every lag is populated, so summing over even 2m with c fitted to
    // the same grid stays an upper-bound-consistent model either way: the
    // half-angle tau also decays like c/n^2 and we sum both parities below
    double rem = 0;
    const bool even_only = variant == SymbolVariant::FullAngle;
    const double p = 2.0 * s;
    long long m0 = even_only ? aperture / 2 : aperture;
    for (long long m = m0 + 1;; ++m) {
        double n = even_only ? 2.0 * m : double(m);
        double term = std::pow(row.c_fit / (n * n), s);
        rem += term;
        if (term < 1e-18 * rem && m > m0 + 8) {
            double scale = even_only ? std::pow(2.0, -p) : 1.0;
            rem += scale * std::pow(row.c_fit, s) * std::pow(double(m), 1.0 - p) /
                   (p - 1.0);
            break;
        }
        if (m > 100000000) break;
    }
    row.remainder = 2.0 * rem;
    return row;
}

double box_max_row_s_sum(const Eigen::MatrixXd& A, double s) {
    double best = 0;
    for (int r = 0; r < A.rows(); ++r) {
        double acc = 0;
        for (int c = 0; c < A.cols(); ++c) acc += std::pow(std::abs(A(r, c)), s);
        best = std::max(best, acc);
    }
    return best;
}

}  // namespace

PairKernelConstants pair_kernel_constants(SymbolVariant variant, int size, double s) {
    if (s <= 0.5 || s >= 1.0)
        throw std::domain_error("pair kernel constants need s in (1/2, 1) in d=1");
    if (size < 4) throw std::invalid_argument("box too small");

    PairKernelConstants out;
    out.s = s;

    // finite-box values from the actual product-box matrices
    LatticeSpec spec{1, size, Boundary::TruncatedKernel, 0};
    HoppingKernel kernel = build_kernel(spec, variant);
    Eigen::MatrixXd T2 = pair_hop(kernel);
    out.c1.box_value = box_max_row_s_sum(T2, s);
    out.c2.box_value = box_max_row_s_sum(T2 * T2, s);

    // extended-aperture estimate of the infinite-lattice row sums
    const int A = std::max(64, 16 * size);
    AxisRow axis = axis_row_sums(variant, A, s);
    const double tau0s = std::pow(std::abs(axis.tau[0]), s);
    const double sigma = axis.direct + axis.remainder;
    out.c1.total = 2.0 * (sigma - tau0s) + std::pow(2.0 * std::abs(axis.tau[0]), s);
    out.c1.tail_bound = out.c1.total - out.c1.box_value;

    // the squared axis kernel has the symbol h itself, a trig polynomial, so
    // its displacement row is exact and finitely supported (lags 0..2)
    std::vector<double> a2(5, 0.0);
    {
        const int M = 64;
        for (int n = 0; n <= 4; ++n) {
            double acc = 0;
            for (int j = 0; j < M; ++j) {
                double k = 2.0 * std::numbers::pi * j / M;
                acc += symbol_h(variant, &k, 1) * std::cos(k * n);
            }
            a2[n] = std::abs(acc / M) < 1e-14 ? 0.0 : acc / M;
        }
    }
    auto a2_at = [&](long long n) {
        long long an = std::llabs(n);
        return an <= 4 ? a2[an] : 0.0;
    };
    auto tau_at = [&](long long n) {
        long long an = std::llabs(n);
        return an <= A ? axis.tau[an] : 0.0;
    };

    // direct double sum over the extended aperture square
    double direct2 = 0;
    for (long long n1 = -A; n1 <= A; ++n1) {
        const double t1 = tau_at(n1);
        for (long long n2 = -A; n2 <= A; ++n2) {
            double v = 2.0 * t1 * tau_at(n2);
            if (n2 == 0) v += a2_at(n1);
            if (n1 == 0) v += a2_at(n2);
            direct2 += std::pow(std::abs(v), s);
        }
    }
    // strips outside the square: the delta terms vanish there and the product
    // term factorizes, giving 2^s (2 sigma_in sigma_out + sigma_out^2)
    const double sigma_out = axis.remainder;
    const double strip =
        std::pow(2.0, s) * (2.0 * axis.direct * sigma_out + sigma_out * sigma_out);
    out.c2.total = direct2 + strip;
    out.c2.tail_bound = out.c2.total - out.c2.box_value;
    return out;
}

TwoPhotonBand two_photon_band(const ModelParams& params, double s,
                              const PairKernelConstants& constants) {
    params.validate();
    TwoPhotonBand band;
    band.center = 2.0 * params.omega;
    band.threshold = std::pow(constants.c2.total, 1.0 / s) / 2.0;
    const double g2r = params.coupling_sq();
    if (g2r > band.threshold) {
        band.has_band = true;
        band.radius = std::pow(
            (std::pow(2.0 * g2r, s) - constants.c2.total) / constants.c1.total, 1.0 / s);
    }
    return band;
}

}  // namespace photonloc
