#include "photonloc/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "photonloc/linalg.hpp"

namespace photonloc {

int LatticeSpec::sites() const {
    long long n = 1;
    for (int i = 0; i < dim; ++i) n *= size;
    return static_cast<int>(n);
}

int LatticeSpec::dual_points() const {
    return oversample > 0 ? oversample : 8 * size;
}

void LatticeSpec::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("lattice dim must be 1, 2 or 3");
    if (size < 1) throw std::invalid_argument("lattice size must be positive");
    if (oversample < 0) throw std::invalid_argument("oversample must be nonnegative");
    long long n = 1;
    for (int i = 0; i < dim; ++i) {
        n *= size;
        if (n > (1LL << 40)) throw std::invalid_argument("lattice volume overflow");
    }
    if (boundary == Boundary::TruncatedKernel && dual_points() < 4 * size)
        throw std::invalid_argument(
            "oversample below 4*size voids the truncation-error guarantee");
}

int site_index(const LatticeSpec& spec, const std::vector<int>& x) {
    if (static_cast<int>(x.size()) != spec.dim)
        throw std::invalid_argument("coordinate dimension mismatch");
    int idx = 0;
    for (int i = 0; i < spec.dim; ++i) {
        if (x[i] < 0 || x[i] >= spec.size)
            throw std::invalid_argument("coordinate out of box: " + std::to_string(x[i]));
        idx = idx * spec.size + x[i];
    }
    return idx;
}

std::vector<int> site_coords(const LatticeSpec& spec, int idx) {
    if (idx < 0 || idx >= spec.sites()) throw std::invalid_argument("site index out of range");
    std::vector<int> x(spec.dim);
    for (int i = spec.dim - 1; i >= 0; --i) {
        x[i] = idx % spec.size;
        idx /= spec.size;
    }
    return x;
}

double symbol_h(SymbolVariant variant, const double* k, int dim) {
    double h = 0;
    for (int i = 0; i < dim; ++i) {
        double arg = variant == SymbolVariant::FullAngle ? k[i] : 0.5 * k[i];
        double s = std::sin(arg);
        h += 4.0 * s * s;
    }
    return h;
}

namespace {

// cascade of cosine transforms: sqrt(h) sampled on the M^d dual grid is
// contracted one axis at a time against cos(k n), so the cost stays
// O(M^d (A+1)) instead of O((M (A+1))^d)
std::vector<double> cosine_transform_table(SymbolVariant variant, int dim, int aperture,
                                           int M) {
    const long long A1 = aperture + 1;
    std::vector<double> k(M);
    for (int j = 0; j < M; ++j) k[j] = 2.0 * std::numbers::pi * j / M;

    long long grid = 1;
    for (int i = 0; i < dim; ++i) grid *= M;
    std::vector<double> current(grid);
    std::vector<int> j(dim, 0);
    std::vector<double> kv(dim);
    for (long long idx = 0; idx < grid; ++idx) {
        long long t = idx;
        for (int i = dim - 1; i >= 0; --i) {
            j[i] = static_cast<int>(t % M);
            t /= M;
        }
        for (int i = 0; i < dim; ++i) kv[i] = k[j[i]];
        current[idx] = std::sqrt(symbol_h(variant, kv.data(), dim));
    }

    std::vector<double> cosjn(static_cast<std::size_t>(M) * A1);
    for (int jj = 0; jj < M; ++jj)
        for (long long n = 0; n < A1; ++n) cosjn[jj * A1 + n] = std::cos(k[jj] * n);

    // after transforming axes (t..dim-1) the layout is
    // [j_0 .. j_{t-1}] x [n_t .. n_{dim-1}], row-major; transform axis t-1
    // by contracting with stride inner = A1^(dim-t)
    for (int axis = dim - 1; axis >= 0; --axis) {
        long long outer = 1;
        for (int i = 0; i < axis; ++i) outer *= M;
        long long inner = 1;
        for (int i = axis + 1; i < dim; ++i) inner *= A1;
        std::vector<double> next(outer * A1 * inner, 0.0);
        for (long long b = 0; b < outer; ++b) {
            for (int jj = 0; jj < M; ++jj) {
                const double* src = current.data() + (b * M + jj) * inner;
                const double* row = cosjn.data() + static_cast<std::size_t>(jj) * A1;
                for (long long n = 0; n < A1; ++n) {
                    double* dst = next.data() + (b * A1 + n) * inner;
                    const double w = row[n] / M;
                    for (long long i = 0; i < inner; ++i) dst[i] += w * src[i];
                }
            }
        }
        current.swap(next);
    }
    return current;  // size A1^dim, lags row-major
}

}  // namespace

std::vector<double> displacement_table(SymbolVariant variant, int dim, int aperture,
                                       int dual_points) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
    if (aperture < 0) throw std::invalid_argument("aperture must be nonnegative");
    // dual_points == aperture + 1 is the circulant mode: every lag absorbs its
    // full alias series, which is exactly the periodic-symbol kernel.  Anything
    // between that and the Nyquist margin mixes neighboring lags ambiguously.
    if (dual_points != aperture + 1 && dual_points < 2 * (aperture + 1))
        throw std::invalid_argument("dual grid too coarse for requested aperture");
    return cosine_transform_table(variant, dim, aperture, dual_points);
}

double HoppingKernel::displacement_entry(const std::vector<int>& n) const {
    long long idx = 0;
    for (int i = 0; i < spec.dim; ++i) {
        int a = std::abs(n[i]);
        if (a > aperture) return 0.0;
        idx = idx * (aperture + 1) + a;
    }
    return table[idx];
}

HoppingKernel build_kernel(const LatticeSpec& spec, SymbolVariant variant) {
    spec.validate();
    const int N = spec.sites();
    check_dense_budget(N, "hopping kernel");

    HoppingKernel kernel;
    kernel.spec = spec;
    kernel.variant = variant;

    const bool periodic = spec.boundary == Boundary::PeriodicSymbol;
    const int L = spec.size;
    // periodic mode samples the box's own dual grid; tau is then circulant and
    // the full lag range [0, L-1] is meaningful (tau(n) = tau(L-n))
    kernel.aperture = L - 1;
    kernel.table = displacement_table(variant, spec.dim, L - 1,
                                      periodic ? L : spec.dual_points());

    kernel.matrix.setZero(N, N);
    std::vector<int> n(spec.dim);
    for (int r = 0; r < N; ++r) {
        auto xr = site_coords(spec, r);
        for (int c = 0; c <= r; ++c) {
            auto xc = site_coords(spec, c);
            for (int i = 0; i < spec.dim; ++i) {
                int d = xr[i] - xc[i];
                if (periodic) {
                    d = ((d % L) + L) % L;  // circulant lag; table is even so
                                            // min(d, L-d) and d agree
                }
                n[i] = d;
            }
            double v = kernel.displacement_entry(n);
            kernel.matrix(r, c) = v;
            kernel.matrix(c, r) = v;
        }
    }
    return kernel;
}

double decay_shell_tail(double c0, double s, int dim, int from) {
    if (s * (dim + 1) <= dim)
        throw std::domain_error("shell tail diverges: need s > d/(d+1)");
    if (c0 == 0.0) return 0.0;
    double acc = 0;
    double prev_count = std::pow(2.0 * from + 1.0, dim);
    for (int m = from + 1;; ++m) {
        double count = std::pow(2.0 * m + 1.0, dim);
        double shell = count - prev_count;  // sites with sup-norm exactly m
        prev_count = count;
        double term = shell * std::pow(c0 / std::pow(double(m), dim + 1), s);
        acc += term;
        if (term < 1e-18 * acc && m > from + 8) {
            // integral bound on the remainder of the series
            double p = s * (dim + 1) - (dim - 1);
            acc += 2.0 * dim * std::pow(2.0, dim - 1) * std::pow(c0, s) *
                   std::pow(double(m), 1.0 - p) / (p - 1.0);
            break;
        }
        if (m > 100000000) break;
    }
    return acc;
}

SNormReport kernel_s_norm(const HoppingKernel& kernel, double s) {
    const int d = kernel.spec.dim;
    if (s <= 0.0 || s >= 1.0) throw std::domain_error("s must lie in (0,1)");
    if (s * (d + 1) <= d)
        throw std::domain_error("row s-sum diverges for s <= d/(d+1)");

    SNormReport rep;
    const auto& T = kernel.matrix;
    for (int r = 0; r < T.rows(); ++r) {
        double acc = 0;
        for (int c = 0; c < T.cols(); ++c) acc += std::pow(std::abs(T(r, c)), s);
        rep.box_value = std::max(rep.box_value, acc);
    }

    if (kernel.spec.boundary == Boundary::PeriodicSymbol) {
        // nothing is truncated in the circulant approximation
        rep.total = rep.box_value;
        return rep;
    }

    // decay envelope |tau(n)| <= c0 * |n|^-(d+1) fitted over the outer half of
    // the displacement table (sup-norm radius)
    const int A = kernel.aperture;
    double c0 = 0;
    const int A1 = A + 1;
    std::vector<int> n(d, 0);
    long long entries = 1;
    for (int i = 0; i < d; ++i) entries *= A1;
    for (long long idx = 0; idx < entries; ++idx) {
        long long t = idx;
        int radius = 0;
        for (int i = d - 1; i >= 0; --i) {
            n[i] = static_cast<int>(t % A1);
            t /= A1;
            radius = std::max(radius, n[i]);
        }
        if (radius < std::max(1, A / 2)) continue;
        double v = std::abs(kernel.table[idx]) * std::pow(double(radius), d + 1);
        c0 = std::max(c0, v);
    }
    rep.c0 = c0;
    rep.tail_bound = decay_shell_tail(c0, s, d, A);
    rep.total = rep.box_value + rep.tail_bound;
    return rep;
}

}  // namespace photonloc
