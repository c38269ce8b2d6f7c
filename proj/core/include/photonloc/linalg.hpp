#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace photonloc {

// hard cap on dense dimensions; above this the O(n^3) steps stop being
// interactive on one core and the request is almost certainly a mistake
inline constexpr int kDenseDimBudget = 8192;

void check_dense_budget(int dim, const char* what);

struct SpectralResult {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns
    Eigen::VectorXd residuals;     // ||H v - lambda v|| per pair
    double max_residual = 0;
};

SpectralResult spectrum_symmetric(const Eigen::MatrixXd& H);

struct GeneralSpectralResult {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;
    Eigen::VectorXd residuals;
    double max_residual = 0;
    std::vector<int> real_classified;  // indices with |Im| <= classify_tol
    double nonreal_fraction = 0;
    double classify_tol = 0;  // scaled to ||H||
};

GeneralSpectralResult spectrum_general(const Eigen::MatrixXd& H);

double smallest_singular_value(const Eigen::MatrixXd& A);

// cheap sigma_min estimate from a few inverse iterations on a prefactored LU;
// good to a few percent, used only as a singularity detector
double estimate_smin_lu(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, int dim,
                        int iters = 8);

}  // namespace photonloc
