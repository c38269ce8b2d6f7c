#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "photonloc/disorder.hpp"
#include "photonloc/lattice.hpp"
#include "photonloc/one_photon.hpp"

namespace photonloc {

struct GreensVector {
    Eigen::VectorXcd values;  // G(x) = <delta_x, (H_mu - E - i eps)^{-1} delta_x0>
    int source = 0;
    double energy = 0;
    double epsilon = 0;
    double mu = 0;
    double residual = 0;  // ||(H - E - i eps) G - delta|| / ||G||
};

// dense solve; eps = 0 demands E detectably off the spectrum
GreensVector greens(const Eigen::MatrixXd& h_mu, int x0, double E, double epsilon,
                    double mu = 0.0);

// single-site resolvent dependence: holding every other potential entry fixed,
// G(x) as a function of V(x) must be an exact Mobius map alpha / (V - beta)
struct KreinCheck {
    std::complex<double> alpha;
    std::complex<double> beta;
    double max_deviation = 0;  // relative misfit of the non-anchor sweep points
    bool degenerate = false;   // G vanished along the sweep; no fit possible
};

KreinCheck krein_dependence_check(const HoppingKernel& kernel,
                                  const DisorderField& field,
                                  const ModelParams& params, double mu, double E,
                                  int x0, int x, double epsilon = 1e-6);

struct MomentReport {
    double s = 0;
    double E = 0;
    double mu = 0;
    double epsilon = 0;
    int realizations = 0;
    int failures = 0;

    // per-site estimates are median-of-means over 8 realization blocks; the
    // distance profile averages site estimates at equal |x - x0|, so that
    // sum_r count(r) * moment(r) telescopes back to xi_hat exactly
    std::vector<double> distance;
    std::vector<int> site_count;
    std::vector<double> moment;
    std::vector<double> err_low;   // point estimate minus lower block quartile
    std::vector<double> err_high;  // upper block quartile minus point estimate

    double xi_hat = 0;     // sum over sites of the per-site moment estimates
    double xi_hat_se = 0;  // asymptotic standard error of the block median

    double slope = 0;  // decay rate of log moment vs distance, block-resampled
    double slope_half_width = 0;  // 95% confidence half width (t, 7 dof)
    bool slope_valid = false;

    // filled by the caller once the decoupling table and C_s are in hand
    double criterion = std::numeric_limits<double>::quiet_NaN();
    double Ds = std::numeric_limits<double>::quiet_NaN();
    bool predicted = false;
};

MomentReport moment_ensemble(const LatticeSpec& spec, SymbolVariant variant,
                             const ModelParams& params, double mu, double E, double s,
                             double epsilon, int n_realizations,
                             std::uint64_t master_seed, int n_workers = 0);

struct SimonWolffReport {
    std::vector<double> epsilons;  // decreasing
    std::vector<double> sums;      // sum_y |G(x0, y, E + i eps)|^2
    double growth_exponent = 0;    // slope of log sum vs log(1/eps), last step
    bool bounded = false;          // exponent below 1/2
};

SimonWolffReport simon_wolff_sum(const Eigen::MatrixXd& h_mu, int x0, double E,
                                 const std::vector<double>& epsilons);

struct WegnerTailCheck {
    std::vector<double> thresholds;  // 1, 2, 4, ... until survival empties
    std::vector<double> survival;
    std::vector<double> bound;  // 4 sqrt(2) / (lambda t)
    bool passed = false;        // survival <= bound + 3 binomial SE throughout
};

WegnerTailCheck wegner_tail_check(const std::vector<std::complex<double>>& g_values,
                                  double lambda);

struct XiBoundVerdict {
    double xi_hat = 0;
    double bound = 0;  // Ds / (1 - criterion) plus 3 standard errors
    bool verdict = false;
};

XiBoundVerdict xi_bound_check(const MomentReport& report, double Ds, double criterion);

}  // namespace photonloc
