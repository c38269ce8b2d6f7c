#include "photonloc/diagnostics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace photonloc {

double ipr(const Eigen::VectorXd& state) {
    return state.array().square().square().sum();
}

double ipr(const Eigen::VectorXcd& state) {
    return state.array().abs2().square().sum();
}

LocalizationFit localization_length(const Eigen::VectorXd& state) {
    constexpr double kFloor = 1e-12;
    const int n = static_cast<int>(state.size());
    int peak = 0;
    state.cwiseAbs().maxCoeff(&peak);

    std::vector<double> r, y;
    for (int x = 0; x < n; ++x) {
        const double a = std::abs(state[x]);
        if (a <= kFloor) continue;
        r.push_back(std::abs(x - peak));
        y.push_back(std::log(a));
    }

    LocalizationFit fit;
    if (r.size() < 3) return fit;

    double rbar = 0, ybar = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        rbar += r[i];
        ybar += y[i];
    }
    rbar /= static_cast<double>(r.size());
    ybar /= static_cast<double>(r.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        sxx += (r[i] - rbar) * (r[i] - rbar);
        sxy += (r[i] - rbar) * (y[i] - ybar);
        syy += (y[i] - ybar) * (y[i] - ybar);
    }
    if (sxx == 0.0 || syy == 0.0) return fit;

    const double slope = sxy / sxx;
    fit.r_squared = (sxy * sxy) / (sxx * syy);
    if (slope < 0.0) {
        fit.xi = -1.0 / slope;
        fit.accepted = fit.r_squared >= 0.8;
    }
    return fit;
}

std::vector<double> spacing_ratios(std::vector<double> eigenvalues) {
    std::sort(eigenvalues.begin(), eigenvalues.end());
    std::vector<double> ratios;
    for (std::size_t i = 0; i + 2 < eigenvalues.size(); ++i) {
        const double d1 = eigenvalues[i + 1] - eigenvalues[i];
        const double d2 = eigenvalues[i + 2] - eigenvalues[i + 1];
        const double hi = std::max(d1, d2);
        if (hi == 0.0) continue;  // exact degeneracy, ratio undefined
        ratios.push_back(std::min(d1, d2) / hi);
    }
    return ratios;
}

double r_statistic(const std::vector<double>& eigenvalues) {
    if (eigenvalues.size() < 51)
        throw std::invalid_argument("r statistic needs at least 50 gaps");
    const std::vector<double> ratios = spacing_ratios(eigenvalues);
    if (ratios.empty())
        throw std::invalid_argument("r statistic found no usable gap pairs");
    double acc = 0;
    for (double v : ratios) acc += v;
    return acc / static_cast<double>(ratios.size());
}

EigenstateDiagnostics analyze_eigenstates(const SpectralResult& spectrum,
                                          const LatticeSpec& spec, double e_lo,
                                          double e_hi) {
    if (spec.dim != 1)
        throw std::invalid_argument("envelope diagnostics are d=1 only");
    const int N = spec.sites();
    if (spectrum.eigenvectors.rows() != 2 * N)
        throw std::invalid_argument("spectrum does not match a one-photon operator");

    EigenstateDiagnostics out;
    for (int i = 0; i < spectrum.eigenvalues.size(); ++i) {
        const double e = spectrum.eigenvalues[i];
        if (e < e_lo || e > e_hi) continue;
        const Eigen::VectorXd full = spectrum.eigenvectors.col(i);
        Eigen::VectorXd photon = full.head(N);
        const double pn = photon.norm();
        LocalizationFit fit;
        if (pn > 1e-12) fit = localization_length(photon / pn);
        out.energy.push_back(e);
        out.ipr_value.push_back(ipr(full));
        out.xi.push_back(fit.xi);
        out.r_squared.push_back(fit.r_squared);
        out.fit_accepted.push_back(fit.accepted ? 1 : 0);
    }
    return out;
}

namespace {

// squared centered displacement per photon-block entry; supports both the
// one-photon block (N sites) and the two-photon pair block (N^2 entries)
Eigen::VectorXd block_weights(const LatticeSpec& spec, int half) {
    const int N = spec.sites();
    Eigen::VectorXd w(half);
    if (half == N) {
        for (int i = 0; i < N; ++i) {
            const std::vector<int> c = site_coords(spec, i);
            double acc = 0;
            for (int axis = 0; axis < spec.dim; ++axis) {
                const double cc = centered_coord(c[axis], spec.size);
                acc += cc * cc;
            }
            w[i] = acc;
        }
    } else if (half == N * N) {
        Eigen::VectorXd one = block_weights(spec, N);
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) w[a * N + b] = one[a] + one[b];
    } else {
        throw std::invalid_argument("state size matches neither sector layout");
    }
    return w;
}

}  // namespace

EvolutionTrace evolve(const Eigen::MatrixXd& H, const LatticeSpec& spec,
                      const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                      bool record_states) {
    const int dim = static_cast<int>(H.rows());
    if (H.cols() != dim || psi0.size() != dim)
        throw std::invalid_argument("evolution operator/state size mismatch");
    if (dim % 2 != 0) throw std::invalid_argument("expected a two-block operator");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1])
            throw std::invalid_argument("times must be nondecreasing");

    const int half = dim / 2;
    const Eigen::VectorXd w = block_weights(spec, half);
    const double hnorm = std::max(H.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    const bool symmetric = (H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12 * hnorm;

    EvolutionTrace trace;
    trace.times = times;
    if (record_states)
        trace.states.resize(dim, static_cast<Eigen::Index>(times.size()));

    auto record = [&](std::size_t k, const Eigen::VectorXcd& psi) {
        trace.total_norm.push_back(psi.norm());
        const double p_photon = psi.head(half).squaredNorm();
        trace.photon_probability.push_back(p_photon);
        trace.atom_probability.push_back(psi.tail(half).squaredNorm());
        double m2 = 0;
        if (p_photon > 1e-300)
            m2 = psi.head(half).array().abs2().matrix().dot(w) / p_photon;
        trace.photon_second_moment.push_back(m2);
        if (record_states) trace.states.col(static_cast<Eigen::Index>(k)) = psi;
    };

    const std::complex<double> mi(0.0, -1.0);
    if (symmetric) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        const Eigen::VectorXcd c = es.eigenvectors().transpose() * psi0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const Eigen::VectorXcd phase =
                (mi * times[k] * es.eigenvalues().cast<std::complex<double>>().array())
                    .exp();
            record(k, es.eigenvectors() * (phase.array() * c.array()).matrix());
        }
        return trace;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const double smin = svd.singularValues().minCoeff();
    trace.eigenbasis_condition =
        smin > 0 ? svd.singularValues().maxCoeff() / smin
                 : std::numeric_limits<double>::infinity();

    if (trace.eigenbasis_condition <= 1e8) {
        const Eigen::VectorXcd c = V.partialPivLu().solve(psi0);
        for (std::size_t k = 0; k < times.size(); ++k) {
            const Eigen::VectorXcd phase =
                (mi * times[k] * es.eigenvalues().array()).exp();
            record(k, V * (phase.array() * c.array()).matrix());
        }
        return trace;
    }

    // defective or near-defective eigenbasis: step with matrix exponentials
    trace.used_expm = true;
    const Eigen::MatrixXcd Hc = H.cast<std::complex<double>>();
    Eigen::VectorXcd psi = psi0;
    double t_prev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double dt = times[k] - t_prev;
        if (dt != 0.0) psi = (mi * dt * Hc).exp() * psi;
        t_prev = times[k];
        record(k, psi);
    }
    return trace;
}

}  // namespace photonloc
