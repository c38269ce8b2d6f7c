#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "photonloc/one_photon.hpp"
#include "photonloc/quadrature.hpp"

namespace photonloc {

// averages over the uniform disorder law on [-1, 1] (density dV/2)

// E |beta - V|^{-s}; for real beta inside the interval the integrable
// singularity is split out and removed by substitution
QuadResult disorder_singular_moment(std::complex<double> beta, double s);

// E |eta - V|^s |beta - V|^{-s}
QuadResult decoupling_numerator(double eta, std::complex<double> beta, double s);

struct ThetaEstimate {
    double eta = 0;
    double theta_hat = 0;      // value used downstream (envelope, see below)
    double ratio_infimum = 0;  // best [num/den]^{1/s} found by the beta search
    double gap_bound = 0;      // almost-sure distance bound min_V |eta - V|
    std::complex<double> argmin_beta;
    bool boundary_argmin = false;  // infimum search ended on the domain edge
};

// theta_hat combines two valid decoupling constants and reports both:
//   - the beta-search ratio infimum (capped at 1),
//   - the pointwise bound min_V |eta - V|, which dominates for eta > 2.
// The envelope is increasing in eta and equals eta - 1 for eta >= 2.
ThetaEstimate theta_s_estimate(double s, double eta);

struct ThetaTable {
    double s = 0;
    std::vector<double> etas;
    std::vector<ThetaEstimate> estimates;
    double kappa_hat = 0;  // min of theta_hat over the grid, locally refined

    // piecewise-linear on the grid; eta - 1 beyond eta = 2
    double eval(double eta) const;
};

// grid on [0, eta_max] with the given step; eta_max >= 2 required so the
// table always reaches the regime where theta is known in closed form
ThetaTable build_theta_table(double s, double eta_max = 2.0, double step = 0.05);

double kappa_s_estimate(double s);

// a-priori fractional-moment bound D_s with A = 4 sqrt(2) |E - Omega| / g^2 rho0
double apriori_Ds(const ModelParams& params, double E, double s);
double apriori_Ds_closed_form(double A, double s);  // A^s / (1 - s)
// the defining integral of min{1, A t^(-1/s)} over t in (0, inf), evaluated
// numerically as an independent cross-check of the closed form
double apriori_Ds_quadrature(double A, double s);

// localization criterion: c_s * [ |g^2 rho0 / (mu - Omega)| * theta(eta) ]^{-s}
// with eta = |E (mu - Omega) / g^2 rho0 - 1|; values below 1 predict decay
double criterion_one_photon(const ModelParams& params, double mu, double E, double s,
                            double c_s, const ThetaTable& theta);

// criterion evaluated on the diagonal mu = E
bool predicted_localized(const ModelParams& params, double E, double s, double c_s,
                         const ThetaTable& theta);

struct BandConstants {
    double K = 0;   // band half-width is K * g^2 rho0 around Omega
    double E0 = 0;  // criterion < 1 for every |E| above this
    double overlap_C = 0;
    bool scan_ok = false;       // E0 scan found a stable crossing below 1e6
    bool overlap_applicable = false;  // g^2 rho0 exceeded overlap_C
    bool overlap_ok = false;    // sampled E outside the core radius all pass
};

BandConstants band_constants_one_photon(const ModelParams& params, double s, double c_s,
                                        double kappa_s, const ThetaTable& theta,
                                        std::uint64_t sample_seed = 7);

}  // namespace photonloc
