#include "photonloc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "photonloc/errors.hpp"

namespace photonloc {

void check_dense_budget(int dim, const char* what) {
    if (dim > kDenseDimBudget)
        throw BudgetExceeded(std::string(what) + ": dense dimension " +
                             std::to_string(dim) + " exceeds budget " +
                             std::to_string(kDenseDimBudget));
}

SpectralResult spectrum_symmetric(const Eigen::MatrixXd& H) {
    check_dense_budget(static_cast<int>(H.rows()), "symmetric eigensolve");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigensolver failed to converge");
    SpectralResult out;
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
    const int n = static_cast<int>(H.rows());
    out.residuals.resize(n);
    for (int i = 0; i < n; ++i)
        out.residuals[i] =
            (H * out.eigenvectors.col(i) - out.eigenvalues[i] * out.eigenvectors.col(i))
                .norm();
    out.max_residual = n > 0 ? out.residuals.maxCoeff() : 0.0;
    return out;
}

GeneralSpectralResult spectrum_general(const Eigen::MatrixXd& H) {
    check_dense_budget(static_cast<int>(H.rows()), "general eigensolve");
    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("general eigensolver failed to converge");
    GeneralSpectralResult out;
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
    const int n = static_cast<int>(H.rows());
    const double scale = H.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    out.classify_tol = 1e-8 * scale;
    out.residuals.resize(n);
    for (int i = 0; i < n; ++i) {
        out.residuals[i] = (H.cast<std::complex<double>>() * out.eigenvectors.col(i) -
                            out.eigenvalues[i] * out.eigenvectors.col(i))
                               .norm();
        if (std::abs(out.eigenvalues[i].imag()) <= out.classify_tol)
            out.real_classified.push_back(i);
    }
    out.max_residual = n > 0 ? out.residuals.maxCoeff() : 0.0;
    out.nonreal_fraction =
        n > 0 ? 1.0 - static_cast<double>(out.real_classified.size()) / n : 0.0;
    return out;
}

double smallest_singular_value(const Eigen::MatrixXd& A) {
    check_dense_budget(static_cast<int>(A.rows()), "singular values");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues().minCoeff();
}

double estimate_smin_lu(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, int dim,
                        int iters) {
    // inverse power iteration; exact sigma_min only for symmetric input, but a
    // singularity detector does not need more
    Eigen::VectorXd x = Eigen::VectorXd::Ones(dim);
    for (int i = 0; i < dim; ++i) x[i] += 0.3 * std::sin(3.7 * i + 0.4);
    x.normalize();
    double nu = 0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd y = lu.solve(x);
        nu = y.norm();
        if (!std::isfinite(nu) || nu == 0.0) return 0.0;
        x = y / nu;
    }
    return 1.0 / nu;
}

}  // namespace photonloc
