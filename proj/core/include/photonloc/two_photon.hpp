#pragma once

#include <Eigen/Dense>

#include <vector>

#include "photonloc/disorder.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/one_photon.hpp"

namespace photonloc {

// pair hop T2 = T (x) I + I (x) T on the product box
Eigen::MatrixXd pair_hop(const HoppingKernel& kernel);

// nonsymmetric block operator [[T2, B],[2g I, Omega I + T2/2]] acting on
// (photon-pair amplitude, photon+excitation amplitude); B = diag((g rho0/2)(2+W))
struct TwoPhotonOperator {
    Eigen::MatrixXd H;         // 2M x 2M with M = N^2
    Eigen::MatrixXd pair_T;    // T2, M x M
    Eigen::VectorXd pair_diag; // B diagonal
    int sites = 0;             // N
};

TwoPhotonOperator build_two_photon(const HoppingKernel& kernel,
                                   const DisorderField& field,
                                   const ModelParams& params);

// effective family on the pair sector obtained by eliminating the photon-pair
// amplitude: -T2^2/(2(mu-Omega)) + ((3mu-2Omega)/(2(mu-Omega))) T2
//            + (g^2 rho0/(mu-Omega)) diag(2+W)
struct TwoPhotonEffective {
    Eigen::MatrixXd H;  // M x M, symmetric
    double mu = 0;
};

TwoPhotonEffective build_two_photon_effective(const HoppingKernel& kernel,
                                              const DisorderField& field,
                                              const ModelParams& params, double mu);

// per-eigenvalue spectral correspondence for the nonsymmetric block operator:
// real-classified eigenvalues E of H should be singular points of H_E - E, and
// the pair amplitude reconstructs the photon-pair block via
// phi = (1/2g)[(E-Omega) - T2/2] psi
struct TwoPhotonEquivalence {
    std::vector<double> energies;        // real-classified eigenvalues tested
    std::vector<double> smin_effective;  // sigma_min(H_E - E) per energy
    std::vector<double> effective_norm;  // ||H_E|| per energy, the smin scale
    std::vector<double> reconstruction;  // ||(H-E)(phi,psi)||/||(phi,psi)||
    int nonreal_count = 0;
    double nonreal_fraction = 0;
    double hnorm = 0;  // scale used for classification
};

TwoPhotonEquivalence two_photon_equivalence(const HoppingKernel& kernel,
                                            const DisorderField& field,
                                            const ModelParams& params);

double exchange_symmetry_defect(const TwoPhotonOperator& op);

// kernel governing the pair Green's relation: K_mu = T2 (mu - 2 Omega - T2);
// its row s-sums are bounded by |mu-2Omega|^s C1 + C2 with the constants below
Eigen::MatrixXd pair_relation_kernel(const Eigen::MatrixXd& pair_T, double mu,
                                     double omega);

// C1 = max row sum of |T2|^s, C2 = max row sum of |T2^2|^s, each split into the
// finite-box part and an analytic bound on the truncated tail. The tail uses a
// refined-grid extension of the displacement table so the totals are stable in
// the box size (the raw box sums drift by a few percent per size step).
struct TailedConstant {
    double box_value = 0;
    double tail_bound = 0;
    double total = 0;
};

struct PairKernelConstants {
    TailedConstant c1;
    TailedConstant c2;
    double s = 0;
};

PairKernelConstants pair_kernel_constants(SymbolVariant variant, int size, double s);

struct TwoPhotonBand {
    double threshold = 0;  // coupling threshold K: C2^{1/s}/2
    bool has_band = false;
    double radius = 0;     // R
    double center = 0;     // 2 Omega; mu = Omega excluded from the band
};

TwoPhotonBand two_photon_band(const ModelParams& params, double s,
                              const PairKernelConstants& constants);

}  // namespace photonloc
