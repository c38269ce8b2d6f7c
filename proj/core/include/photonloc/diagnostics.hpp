#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "photonloc/lattice.hpp"
#include "photonloc/linalg.hpp"

namespace photonloc {

// sum of |psi(x)|^4 for a normalized state; 1/N for uniform, 1 for a delta
double ipr(const Eigen::VectorXd& state);
double ipr(const Eigen::VectorXcd& state);

struct LocalizationFit {
    double xi = 0;         // decay length, -1/slope of log|psi| vs |x - peak|
    double r_squared = 0;  // fit quality
    bool accepted = false; // R^2 >= 0.8 with a negative slope
};

// exponential-envelope fit for d=1 states over sites with |psi| > 1e-12
LocalizationFit localization_length(const Eigen::VectorXd& state);

// consecutive-gap ratios min/max; unfolding-free level statistics
std::vector<double> spacing_ratios(std::vector<double> eigenvalues);
// mean ratio; requires at least 50 gaps in the supplied window
double r_statistic(const std::vector<double>& eigenvalues);

// per-state diagnostics for a symmetric spectrum restricted to an energy
// window; the envelope fit uses the photon block (first N components) only
struct EigenstateDiagnostics {
    std::vector<double> energy;
    std::vector<double> ipr_value;
    std::vector<double> xi;
    std::vector<double> r_squared;
    std::vector<char> fit_accepted;
};

EigenstateDiagnostics analyze_eigenstates(const SpectralResult& spectrum,
                                          const LatticeSpec& spec, double e_lo,
                                          double e_hi);

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<double> total_norm;
    std::vector<double> photon_probability;
    std::vector<double> atom_probability;
    std::vector<double> photon_second_moment;  // centered coordinates, weighted
    double eigenbasis_condition = 1.0;  // 1 on the symmetric path
    bool used_expm = false;             // ill-conditioned eigenbasis fallback
    Eigen::MatrixXcd states;            // one column per time when recorded
};

// propagates psi0 under exp(-i H t); symmetric H goes through the orthogonal
// eigendecomposition, nonsymmetric H through its eigenbasis with a condition
// report, downgrading to matrix-exponential stepping past condition 1e8
EvolutionTrace evolve(const Eigen::MatrixXd& H, const LatticeSpec& spec,
                      const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                      bool record_states = false);

}  // namespace photonloc
