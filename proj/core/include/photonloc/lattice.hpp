#pragma once

#include <Eigen/Dense>

#include <vector>

namespace photonloc {

// How the finite box approximates the infinite-lattice hop operator.
// PeriodicSymbol samples sqrt(h) on the box's own dual grid (circulant, exactly
// diagonalized by the discrete Fourier basis, wrap-around hops); TruncatedKernel
// computes the infinite-lattice displacement kernel on an oversampled dual grid
// and restricts it to the box (hard restriction, open boundary).
enum class Boundary { PeriodicSymbol, TruncatedKernel };

// Dispersion h(k) = 4 sum_i sin^2(k_i)  (FullAngle) or 4 sum_i sin^2(k_i/2)
// (HalfAngle). The hop operator itself has symbol sqrt(h); FullAngle couples
// only even displacements in d=1, which is why it is kept distinct.
enum class SymbolVariant { FullAngle, HalfAngle };

struct LatticeSpec {
    int dim = 1;
    int size = 1;  // sites per axis
    Boundary boundary = Boundary::TruncatedKernel;
    int oversample = 0;  // dual points per axis for TruncatedKernel; 0 means 8*size

    int sites() const;        // size^dim
    int dual_points() const;  // effective oversample
    void validate() const;    // throws std::invalid_argument
};

// row-major flattening of [0, L)^d
int site_index(const LatticeSpec& spec, const std::vector<int>& x);
std::vector<int> site_coords(const LatticeSpec& spec, int idx);

// coordinate relative to the box centre; boxes of different size share the
// centre, so centered coordinates identify the same physical site across sizes
inline int centered_coord(int x, int L) { return x - (L - 1) / 2; }

double symbol_h(SymbolVariant variant, const double* k, int dim);

// displacement coefficients tau(n) of sqrt(h) for n in [0, aperture]^d (tau is
// even in every axis), flattened row-major with stride aperture+1, computed on
// a dual grid of dual_points per axis. d=1 FullAngle: tau(0) = 4/pi, odd lags
// vanish, tau(2m) = -(4/pi)/(4m^2-1) up to aliasing O(dual_points^-2).
std::vector<double> displacement_table(SymbolVariant variant, int dim, int aperture,
                                       int dual_points);

struct HoppingKernel {
    LatticeSpec spec;
    SymbolVariant variant = SymbolVariant::FullAngle;
    Eigen::MatrixXd matrix;        // sites x sites, symmetric
    std::vector<double> table;     // tau over [0, aperture]^d, row-major
    int aperture = 0;

    double displacement_entry(const std::vector<int>& n) const;
};

HoppingKernel build_kernel(const LatticeSpec& spec,
                           SymbolVariant variant = SymbolVariant::FullAngle);

// sup-row sum of |T(x,x')|^s inside the box plus an analytic bound on the
// truncated tail from a c0 * |n|^-(d+1) envelope fitted at the table edge
struct SNormReport {
    double box_value = 0;
    double tail_bound = 0;
    double total = 0;
    double c0 = 0;
};

// requires s > d/(d+1), otherwise the row sum diverges (throws domain_error)
SNormReport kernel_s_norm(const HoppingKernel& kernel, double s);

// sum over sup-norm shells m > from of (shell site count) * (c0 / m^(d+1))^s
double decay_shell_tail(double c0, double s, int dim, int from);

}  // namespace photonloc
