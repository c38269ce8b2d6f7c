#pragma once

#include <stdexcept>
#include <string>

namespace photonloc {

// effective-operator construction at mu == Omega divides by zero physics-side,
// so it gets its own type rather than a generic invalid_argument
struct MuAtResonance : std::domain_error {
    explicit MuAtResonance(double mu)
        : std::domain_error("effective operator undefined at mu == Omega (mu = " +
                            std::to_string(mu) + ")") {}
};

// eps = 0 Green's function request with E (numerically) in the spectrum
struct SingularAtE : std::domain_error {
    explicit SingularAtE(const std::string& what) : std::domain_error(what) {}
};

// dense-dimension budget guard, keeps d=2 requests from silently thrashing
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// adaptive quadrature failed to reach tolerance; message carries the integrand
// location (for the theta search, the offending beta)
struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& what) : std::runtime_error(what) {}
};

// ensemble aborted because too many realizations failed to solve; silent
// attrition would bias the surviving averages
struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

// a contract the experiment promised its outputs would satisfy did not hold
// at run time (distinct from bad configuration or solver trouble)
struct InvariantViolation : std::runtime_error {
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace photonloc
