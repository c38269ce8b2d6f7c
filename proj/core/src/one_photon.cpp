#include "photonloc/one_photon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "photonloc/errors.hpp"
#include "photonloc/linalg.hpp"

namespace photonloc {

void ModelParams::validate() const {
    if (!(rho0 > 0)) throw std::invalid_argument("rho0 must be positive");
    if (coupling_sq() <= 0) throw std::invalid_argument("g^2 rho0 must be positive");
}

namespace {
void require_same_spec(const HoppingKernel& kernel, const DisorderField& field) {
    const auto& a = kernel.spec;
    const auto& b = field.spec;
    if (a.dim != b.dim || a.size != b.size)
        throw std::invalid_argument("kernel and disorder field use different lattices");
}

void require_off_resonance(double mu, double omega) {
    if (std::abs(mu - omega) <= 1e-12 * std::max(1.0, std::abs(omega)))
        throw MuAtResonance(mu);
}
}  // namespace

OnePhotonOperator build_one_photon(const HoppingKernel& kernel,
                                   const DisorderField& field,
                                   const ModelParams& params) {
    require_same_spec(kernel, field);
    params.validate();
    const int N = kernel.spec.sites();
    check_dense_budget(2 * N, "one-photon operator");

    OnePhotonOperator op;
    op.sites = N;
    op.omega = params.omega;
    op.coupling.resize(N);
    const double c2 = params.coupling_sq();
    for (int x = 0; x < N; ++x)
        op.coupling[x] = std::sqrt(c2 * (1.0 + field.values[x]));

    op.H.setZero(2 * N, 2 * N);
    op.H.topLeftCorner(N, N) = kernel.matrix;
    op.H.bottomRightCorner(N, N) = params.omega * Eigen::MatrixXd::Identity(N, N);
    for (int x = 0; x < N; ++x) {
        op.H(x, N + x) = op.coupling[x];
        op.H(N + x, x) = op.coupling[x];
    }
    return op;
}

EffectiveOperator build_effective(const HoppingKernel& kernel, const DisorderField& field,
                                  const ModelParams& params, double mu) {
    require_same_spec(kernel, field);
    params.validate();
    require_off_resonance(mu, params.omega);
    const int N = kernel.spec.sites();

    EffectiveOperator eff;
    eff.mu = mu;
    eff.H = kernel.matrix;
    const double c = params.coupling_sq() / (mu - params.omega);
    for (int x = 0; x < N; ++x) eff.H(x, x) += c * (1.0 + field.values[x]);
    return eff;
}

EquivalenceProbe equivalence_probe(const HoppingKernel& kernel, const DisorderField& field,
                                   const ModelParams& params, double E) {
    require_off_resonance(E, params.omega);
    OnePhotonOperator op = build_one_photon(kernel, field, params);
    EffectiveOperator eff = build_effective(kernel, field, params, E);
    const int N = op.sites;

    EquivalenceProbe probe;
    probe.E = E;
    probe.smin_full = smallest_singular_value(
        op.H - E * Eigen::MatrixXd::Identity(2 * N, 2 * N));

    // symmetric pencil: smallest |eigenvalue| is sigma_min, and the matching
    // eigenvector doubles as the candidate photon amplitude for the lift
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        eff.H - E * Eigen::MatrixXd::Identity(N, N));
    int imin = 0;
    es.eigenvalues().cwiseAbs().minCoeff(&imin);
    probe.smin_effective = std::abs(es.eigenvalues()[imin]);

    Eigen::VectorXd phi = es.eigenvectors().col(imin);
    Eigen::VectorXd alpha = op.coupling.cwiseProduct(phi) / (E - params.omega);
    Eigen::VectorXd psi(2 * N);
    psi << phi, alpha;
    const double nrm = psi.norm();
    probe.lift_residual = nrm > 0 ? (op.H * psi - E * psi).norm() / nrm : 0.0;
    return probe;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> resolvent_preimage(
    const HoppingKernel& kernel, const DisorderField& field, const ModelParams& params,
    double E, const Eigen::VectorXd& phi_rhs, const Eigen::VectorXd& alpha_rhs) {
    require_off_resonance(E, params.omega);
    OnePhotonOperator op = build_one_photon(kernel, field, params);
    EffectiveOperator eff = build_effective(kernel, field, params, E);
    const int N = op.sites;
    if (phi_rhs.size() != N || alpha_rhs.size() != N)
        throw std::invalid_argument("right-hand side size mismatch");

    // (H_E - E) phi = phi_rhs + S alpha_rhs/(E-Omega), then
    // alpha = (alpha_rhs - S phi)/(Omega - E) satisfies (H-E)(phi,alpha) = rhs
    Eigen::MatrixXd A = eff.H - E * Eigen::MatrixXd::Identity(N, N);
    Eigen::VectorXd rhs =
        phi_rhs + op.coupling.cwiseProduct(alpha_rhs) / (E - params.omega);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd phi = lu.solve(rhs);
    if ((A * phi - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm()))
        throw SingularAtE("effective pencil numerically singular at E");
    Eigen::VectorXd alpha =
        (alpha_rhs - op.coupling.cwiseProduct(phi)) / (params.omega - E);
    return {phi, alpha};
}

FixedPointScan effective_fixed_points(const HoppingKernel& kernel,
                                      const DisorderField& field,
                                      const ModelParams& params, double mu_lo,
                                      double mu_hi, int grid, double tol) {
    if (!(mu_hi > mu_lo)) throw std::invalid_argument("empty scan interval");
    if (grid < 2) throw std::invalid_argument("scan grid needs at least 2 points");
    const double omega = params.omega;
    const double guard = 1e-9 * std::max(1.0, std::abs(omega));

    FixedPointScan scan;
    const int N = kernel.spec.sites();

    auto branch_values = [&](double mu) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            build_effective(kernel, field, params, mu).H);
        ++scan.grid_evaluations;
        return Eigen::VectorXd(es.eigenvalues().array() - mu);
    };

    // each side of Omega separately: branches lambda_i(mu) - mu are continuous
    // and strictly decreasing there, so per-index sign changes bracket roots
    auto scan_side = [&](double lo, double hi) {
        if (!(hi > lo)) return;
        std::vector<double> mus(grid);
        for (int i = 0; i < grid; ++i)
            mus[i] = lo + (hi - lo) * i / (grid - 1);
        Eigen::VectorXd prev = branch_values(mus[0]);
        for (int i = 1; i < grid; ++i) {
            Eigen::VectorXd cur = branch_values(mus[i]);
            for (int b = 0; b < N; ++b) {
                if (prev[b] == 0.0) {
                    scan.fixed_points.push_back(mus[i - 1]);
                    continue;
                }
                if ((prev[b] > 0) == (cur[b] > 0)) continue;
                double a = mus[i - 1], bb = mus[i];
                double fa = prev[b];
                // bisection on the single branch index
                for (int it = 0; it < 80 && bb - a > tol; ++it) {
                    double mid = 0.5 * (a + bb);
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                        build_effective(kernel, field, params, mid).H);
                    ++scan.grid_evaluations;
                    double fm = es.eigenvalues()[b] - mid;
                    if (fm == 0.0) {
                        a = bb = mid;
                        break;
                    }
                    if ((fa > 0) == (fm > 0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        bb = mid;
                    }
                }
                scan.fixed_points.push_back(0.5 * (a + bb));
            }
            prev.swap(cur);
        }
    };

    if (mu_lo < omega - guard)
        scan_side(mu_lo, std::min(mu_hi, omega - guard));
    if (mu_hi > omega + guard)
        scan_side(std::max(mu_lo, omega + guard), mu_hi);

    std::sort(scan.fixed_points.begin(), scan.fixed_points.end());
    // merge duplicates found from both neighbouring grid cells
    std::vector<double> merged;
    for (double v : scan.fixed_points)
        if (merged.empty() || v - merged.back() > 2 * tol) merged.push_back(v);
    scan.fixed_points = std::move(merged);

    for (double mu : scan.fixed_points) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            build_effective(kernel, field, params, mu).H);
        scan.smin.push_back((es.eigenvalues().array() - mu).abs().minCoeff());
    }
    return scan;
}

ResonanceReport resonance_distance(const Eigen::VectorXd& eigenvalues,
                                   const DisorderField& field, double omega) {
    ResonanceReport rep;
    rep.distance = eigenvalues.size() > 0
                       ? (eigenvalues.array() - omega).abs().minCoeff()
                       : std::numeric_limits<double>::infinity();
    for (int x = 0; x < field.values.size(); ++x)
        if (1.0 + field.values[x] == 0.0) rep.degenerate_sites.push_back(x);
    return rep;
}

}  // namespace photonloc
