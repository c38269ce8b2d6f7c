#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "photonloc/disorder.hpp"
#include "photonloc/lattice.hpp"

namespace photonloc {

struct ModelParams {
    double g = 1.0;      // light-matter coupling
    double rho0 = 1.0;   // emitter density
    double omega = 0.0;  // emitter transition frequency
    double coupling_sq() const { return g * g * rho0; }
    void validate() const;  // localization experiments need g^2 rho0 > 0
};

// block operator [[T, S],[S, Omega I]] on photon (+) atom-excitation amplitudes,
// S = diag(sqrt(g^2 rho0 (1+V)))
struct OnePhotonOperator {
    Eigen::MatrixXd H;            // 2N x 2N, symmetric
    Eigen::VectorXd coupling;     // S diagonal, length N
    int sites = 0;
    double omega = 0;
};

OnePhotonOperator build_one_photon(const HoppingKernel& kernel,
                                   const DisorderField& field,
                                   const ModelParams& params);

// the effective family on the photon sector: T + diag(g^2 rho0 (1+V)/(mu-Omega))
struct EffectiveOperator {
    Eigen::MatrixXd H;  // N x N, symmetric
    double mu = 0;
};

EffectiveOperator build_effective(const HoppingKernel& kernel, const DisorderField& field,
                                  const ModelParams& params, double mu);

// spectral correspondence probe at one energy: sigma_min of both pencils plus
// the residual of the lifted pair (phi, S phi/(E-Omega)) when phi is the
// singular vector of the effective pencil
struct EquivalenceProbe {
    double E = 0;
    double smin_full = 0;       // sigma_min(H - E)
    double smin_effective = 0;  // sigma_min(H_E - E)
    double lift_residual = 0;   // ||(H-E) psi|| / ||psi|| for the lifted pair
};

EquivalenceProbe equivalence_probe(const HoppingKernel& kernel, const DisorderField& field,
                                   const ModelParams& params, double E);

// builds the preimage of (phi_rhs, alpha_rhs) under (H - E) through the
// effective resolvent; requires E off the spectrum of H_E and E != Omega
std::pair<Eigen::VectorXd, Eigen::VectorXd> resolvent_preimage(
    const HoppingKernel& kernel, const DisorderField& field, const ModelParams& params,
    double E, const Eigen::VectorXd& phi_rhs, const Eigen::VectorXd& alpha_rhs);

// mu values with mu in the spectrum of H_mu, located by a per-index sign-change
// scan of lambda_i(H_mu) - mu over a grid on one side of Omega plus bisection
struct FixedPointScan {
    std::vector<double> fixed_points;  // ascending
    std::vector<double> smin;          // sigma_min(H_{mu*} - mu*) per point
    int grid_evaluations = 0;
};

FixedPointScan effective_fixed_points(const HoppingKernel& kernel,
                                      const DisorderField& field,
                                      const ModelParams& params, double mu_lo,
                                      double mu_hi, int grid, double tol);

// distance of the computed spectrum to Omega; degenerate sites (1+V = 0)
// decouple an atom at exactly Omega and are flagged
struct ResonanceReport {
    double distance = 0;
    std::vector<int> degenerate_sites;
};

ResonanceReport resonance_distance(const Eigen::VectorXd& eigenvalues,
                                   const DisorderField& field, double omega);

}  // namespace photonloc
