#include "photonloc/moments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "photonloc/errors.hpp"
#include "photonloc/linalg.hpp"

namespace photonloc {

GreensVector greens(const Eigen::MatrixXd& h_mu, int x0, double E, double epsilon,
                    double mu) {
    const int n = static_cast<int>(h_mu.rows());
    if (h_mu.cols() != n) throw std::invalid_argument("greens needs a square matrix");
    if (x0 < 0 || x0 >= n) throw std::invalid_argument("greens source out of range");
    if (epsilon < 0.0) throw std::domain_error("epsilon must be nonnegative");

    GreensVector out;
    out.source = x0;
    out.energy = E;
    out.epsilon = epsilon;
    out.mu = mu;

    const double hnorm =
        std::max(h_mu.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    if (epsilon == 0.0) {
        Eigen::MatrixXd A = h_mu;
        A.diagonal().array() -= E;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        if (estimate_smin_lu(lu, n) < 1e-10 * hnorm) {
            std::ostringstream msg;
            msg << "E = " << E << " is numerically in the spectrum (eps = 0)";
            throw SingularAtE(msg.str());
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Unit(n, x0);
        Eigen::VectorXd g = lu.solve(rhs);
        out.values = g.cast<std::complex<double>>();
        out.residual = (A * g - rhs).norm() / std::max(g.norm(), 1e-300);
    } else {
        Eigen::MatrixXcd A = h_mu.cast<std::complex<double>>();
        A.diagonal().array() -= std::complex<double>(E, epsilon);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Unit(n, x0);
        Eigen::VectorXcd g = A.partialPivLu().solve(rhs);
        out.values = g;
        out.residual = (A * g - rhs).norm() / std::max(g.norm(), 1e-300);
    }
    if (out.residual >= 1e-8)
        throw SolverFailure("resolvent solve residual above 1e-8");
    return out;
}

KreinCheck krein_dependence_check(const HoppingKernel& kernel,
                                 const DisorderField& field,
                                 const ModelParams& params, double mu, double E,
                                 int x0, int x, double epsilon) {
    const int n = kernel.spec.sites();
    if (x < 0 || x >= n) throw std::invalid_argument("krein site out of range");
    if (epsilon <= 0.0) throw std::domain_error("krein sweep needs epsilon > 0");

    const double sweep[5] = {-0.9, -0.45, 0.0, 0.45, 0.9};
    std::complex<double> gx[5];
    for (int i = 0; i < 5; ++i) {
        Eigen::VectorXd vals = field.values;
        vals[x] = sweep[i];
        DisorderField swept = field_from_values(field.spec, vals);
        EffectiveOperator eff = build_effective(kernel, swept, params, mu);
        gx[i] = greens(eff.H, x0, E, epsilon, mu).values[x];
    }

    KreinCheck out;
    double gmax = 0;
    for (auto g : gx) gmax = std::max(gmax, std::abs(g));
    if (gmax < 1e-14) {
        out.degenerate = true;
        return out;
    }

    // anchor the Mobius fit on the endpoints, check the interior points
    out.alpha = (sweep[0] - sweep[4]) / (1.0 / gx[0] - 1.0 / gx[4]);
    out.beta = sweep[0] - out.alpha / gx[0];
    for (int i = 1; i < 4; ++i) {
        const std::complex<double> pred = out.alpha / (sweep[i] - out.beta);
        out.max_deviation =
            std::max(out.max_deviation, std::abs(pred - gx[i]) / std::abs(gx[i]));
    }
    return out;
}

namespace {

double median_of_8(double* v) {
    std::sort(v, v + 8);
    return 0.5 * (v[3] + v[4]);
}

double quartile_sorted(const double* v, int n, double q) {
    // linear-interpolated order statistic on an already sorted array
    const double pos = q * (n - 1);
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, n - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

MomentReport moment_ensemble(const LatticeSpec& spec, SymbolVariant variant,
                             const ModelParams& params, double mu, double E, double s,
                             double epsilon, int n_realizations,
                             std::uint64_t master_seed, int n_workers) {
    spec.validate();
    params.validate();
    if (s <= 0.0 || s >= 1.0) throw std::domain_error("s must lie in (0, 1)");
    if (epsilon < 0.0) throw std::domain_error("epsilon must be nonnegative");
    constexpr int kBlocks = 8;
    if (n_realizations < 8 * kBlocks)
        throw std::invalid_argument(
            "median-of-means needs at least 8 realizations per block (64 total)");

    const int N = spec.sites();
    check_dense_budget(N, "moment ensemble");
    HoppingKernel kernel = build_kernel(spec, variant);

    std::vector<int> centre(spec.dim, (spec.size - 1) / 2);
    const int x0 = site_index(spec, centre);

    // one slot per realization, filled concurrently, reduced in index order so
    // the report does not depend on scheduling
    std::vector<std::vector<double>> slot(n_realizations);
    std::atomic<int> next{0};
    std::exception_ptr fatal = nullptr;
    std::mutex fatal_lock;

    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_realizations) return;
            try {
                DisorderField field =
                    sample_field(spec, master_seed, static_cast<std::uint64_t>(i));
                EffectiveOperator eff = build_effective(kernel, field, params, mu);
                GreensVector g = greens(eff.H, x0, E, epsilon, mu);
                if (g.residual >= 1e-10) continue;  // leave the slot empty
                std::vector<double> m(static_cast<std::size_t>(N));
                for (int xsite = 0; xsite < N; ++xsite)
                    m[static_cast<std::size_t>(xsite)] =
                        std::pow(std::abs(g.values[xsite]), s);
                slot[static_cast<std::size_t>(i)] = std::move(m);
            } catch (const SingularAtE&) {
            } catch (const SolverFailure&) {
            } catch (...) {
                std::lock_guard<std::mutex> lk(fatal_lock);
                if (!fatal) fatal = std::current_exception();
                return;
            }
        }
    };

    int workers = n_workers > 0
                      ? n_workers
                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_realizations);
    if (workers > 1) {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    } else {
        work();
    }
    if (fatal) std::rethrow_exception(fatal);

    MomentReport report;
    report.s = s;
    report.E = E;
    report.mu = mu;
    report.epsilon = epsilon;
    report.realizations = n_realizations;
    for (const auto& m : slot)
        if (m.empty()) ++report.failures;
    if (report.failures > 0.01 * n_realizations) {
        std::ostringstream msg;
        msg << report.failures << " of " << n_realizations
            << " realizations failed to solve (over the 1% budget)";
        throw SolverFailure(msg.str());
    }

    // block accumulation in realization-index order
    Eigen::MatrixXd block_sum = Eigen::MatrixXd::Zero(kBlocks, N);
    int block_n[kBlocks] = {};
    for (int i = 0; i < n_realizations; ++i) {
        const auto& m = slot[static_cast<std::size_t>(i)];
        if (m.empty()) continue;
        const int b = i % kBlocks;
        for (int xsite = 0; xsite < N; ++xsite)
            block_sum(b, xsite) += m[static_cast<std::size_t>(xsite)];
        ++block_n[b];
    }
    for (int b = 0; b < kBlocks; ++b)
        if (block_n[b] == 0)
            throw SolverFailure("an entire median-of-means block failed");

    Eigen::MatrixXd block_mean(kBlocks, N);
    for (int b = 0; b < kBlocks; ++b) block_mean.row(b) = block_sum.row(b) / block_n[b];

    Eigen::VectorXd site_estimate(N);
    for (int xsite = 0; xsite < N; ++xsite) {
        double v[kBlocks];
        for (int b = 0; b < kBlocks; ++b) v[b] = block_mean(b, xsite);
        site_estimate[xsite] = median_of_8(v);
    }
    report.xi_hat = site_estimate.sum();

    double xi_blocks[kBlocks];
    for (int b = 0; b < kBlocks; ++b) xi_blocks[b] = block_mean.row(b).sum();
    {
        double mean = 0;
        for (double v : xi_blocks) mean += v;
        mean /= kBlocks;
        double var = 0;
        for (double v : xi_blocks) var += (v - mean) * (v - mean);
        var /= (kBlocks - 1);
        // 1.2533 converts the standard error of the mean to that of the median
        report.xi_hat_se = 1.2533 * std::sqrt(var / kBlocks);
    }

    // distance groups keyed by integer squared displacement from the source
    std::map<long long, std::vector<int>> groups;
    const std::vector<int> c0 = site_coords(spec, x0);
    for (int xsite = 0; xsite < N; ++xsite) {
        const std::vector<int> cx = site_coords(spec, xsite);
        long long d2 = 0;
        for (int axis = 0; axis < spec.dim; ++axis) {
            const long long dd = cx[axis] - c0[axis];
            d2 += dd * dd;
        }
        groups[d2].push_back(xsite);
    }
    for (const auto& [d2, sites] : groups) {
        const double r = std::sqrt(static_cast<double>(d2));
        double point = 0;
        for (int xsite : sites) point += site_estimate[xsite];
        point /= static_cast<double>(sites.size());

        double mb[kBlocks];
        for (int b = 0; b < kBlocks; ++b) {
            double acc = 0;
            for (int xsite : sites) acc += block_mean(b, xsite);
            mb[b] = acc / static_cast<double>(sites.size());
        }
        std::sort(mb, mb + kBlocks);
        report.distance.push_back(r);
        report.site_count.push_back(static_cast<int>(sites.size()));
        report.moment.push_back(point);
        report.err_low.push_back(
            std::max(0.0, point - quartile_sorted(mb, kBlocks, 0.25)));
        report.err_high.push_back(
            std::max(0.0, quartile_sorted(mb, kBlocks, 0.75) - point));
    }

    // per-block decay slopes over distances where every block mean is positive;
    // shells the kernel cannot reach at all (the full-angle dispersion only
    // couples sites of equal parity) sit at roundoff level and are excluded by
    // a relative floor so they do not masquerade as decay data
    {
        double peak = 0;
        for (std::size_t j = 0; j < report.moment.size(); ++j)
            if (report.distance[j] > 0) peak = std::max(peak, report.moment[j]);
        const double floor = 1e-12 * peak;

        std::vector<double> rs;
        std::vector<std::array<double, kBlocks>> logs;
        std::size_t gi = 0;
        for (const auto& [d2, sites] : groups) {
            const double r = report.distance[gi];
            bool all_positive = d2 > 0 && report.moment[gi] > floor;
            std::array<double, kBlocks> lg{};
            for (int b = 0; b < kBlocks && all_positive; ++b) {
                double acc = 0;
                for (int xsite : sites) acc += block_mean(b, xsite);
                acc /= static_cast<double>(sites.size());
                if (acc <= 0)
                    all_positive = false;
                else
                    lg[static_cast<std::size_t>(b)] = std::log(acc);
            }
            if (all_positive) {
                rs.push_back(r);
                logs.push_back(lg);
            }
            ++gi;
        }
        if (rs.size() >= 3) {
            double slopes[kBlocks];
            double rbar = 0;
            for (double r : rs) rbar += r;
            rbar /= static_cast<double>(rs.size());
            double sxx = 0;
            for (double r : rs) sxx += (r - rbar) * (r - rbar);
            for (int b = 0; b < kBlocks; ++b) {
                double sxy = 0, ybar = 0;
                for (const auto& lg : logs) ybar += lg[static_cast<std::size_t>(b)];
                ybar /= static_cast<double>(logs.size());
                for (std::size_t j = 0; j < rs.size(); ++j)
                    sxy += (rs[j] - rbar) * (logs[j][static_cast<std::size_t>(b)] - ybar);
                slopes[b] = sxy / sxx;
            }
            double mean = 0;
            for (double v : slopes) mean += v;
            mean /= kBlocks;
            double var = 0;
            for (double v : slopes) var += (v - mean) * (v - mean);
            var /= (kBlocks - 1);
            report.slope = mean;
            // two-sided 97.5% Student t quantile at 7 degrees of freedom
            report.slope_half_width = 2.3646 * std::sqrt(var / kBlocks);
            report.slope_valid = true;
        }
    }
    return report;
}

SimonWolffReport simon_wolff_sum(const Eigen::MatrixXd& h_mu, int x0, double E,
                                 const std::vector<double>& epsilons) {
    if (epsilons.size() < 2)
        throw std::invalid_argument("simon_wolff_sum needs at least two epsilons");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (epsilons[i] <= 0.0)
            throw std::domain_error("epsilon list must be positive");
        if (i > 0 && epsilons[i] >= epsilons[i - 1])
            throw std::invalid_argument("epsilon list must be decreasing");
    }
    SimonWolffReport out;
    out.epsilons = epsilons;
    for (double eps : epsilons) {
        GreensVector g = greens(h_mu, x0, E, eps);
        out.sums.push_back(g.values.squaredNorm());
    }
    const std::size_t last = out.sums.size() - 1;
    out.growth_exponent = std::log(out.sums[last] / out.sums[last - 1]) /
                          std::log(epsilons[last - 1] / epsilons[last]);
    out.bounded = out.growth_exponent < 0.5;
    return out;
}

WegnerTailCheck wegner_tail_check(const std::vector<std::complex<double>>& g_values,
                                  double lambda) {
    if (g_values.size() < 512)
        throw std::invalid_argument("wegner tail check needs at least 512 samples");
    if (lambda <= 0.0) throw std::domain_error("lambda must be positive");

    const double n = static_cast<double>(g_values.size());
    std::vector<double> moduli;
    moduli.reserve(g_values.size());
    for (auto g : g_values) moduli.push_back(std::abs(g));

    WegnerTailCheck out;
    out.passed = true;
    const double c = 4.0 * std::sqrt(2.0) / lambda;
    for (double t = 1.0; t <= 0x1p40; t *= 2.0) {
        std::size_t hits = 0;
        for (double m : moduli)
            if (m >= t) ++hits;
        const double surv = hits / n;
        const double se = std::sqrt(surv * (1.0 - surv) / n);
        out.thresholds.push_back(t);
        out.survival.push_back(surv);
        out.bound.push_back(c / t);
        if (surv > c / t + 3.0 * se) out.passed = false;
        if (hits == 0) break;
    }
    return out;
}

XiBoundVerdict xi_bound_check(const MomentReport& report, double Ds, double criterion) {
    if (!(criterion < 1.0))
        throw std::domain_error("xi bound is vacuous unless criterion < 1");
    XiBoundVerdict out;
    out.xi_hat = report.xi_hat;
    out.bound = Ds / (1.0 - criterion) + 3.0 * report.xi_hat_se;
    out.verdict = out.xi_hat <= out.bound;
    return out;
}

}  // namespace photonloc
