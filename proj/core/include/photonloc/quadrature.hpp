#pragma once

#include <functional>

namespace photonloc {

struct QuadResult {
    double value = 0;
    double error = 0;      // estimated absolute error
    bool converged = false;
    int evaluations = 0;
};

// adaptive Gauss-Kronrod 7-15 on [a, b] (a > b allowed, sign handled)
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, double rel_tol = 1e-10,
                        int max_intervals = 2000);

// integral of f(V) * |V - c|^(-s) from c towards b (either direction), with the
// endpoint singularity removed exactly by the substitution u = |V - c|^(1-s):
//   integral = 1/(1-s) * int_0^{|b-c|^{1-s}} f(c +- u^{1/(1-s)}) du
// requires 0 < s < 1
QuadResult integrate_power_endpoint(const std::function<double(double)>& f, double c,
                                    double b, double s, double abs_tol = 1e-12,
                                    double rel_tol = 1e-10);

}  // namespace photonloc
