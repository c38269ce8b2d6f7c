#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "photonloc/lattice.hpp"
#include "photonloc/one_photon.hpp"

namespace photonloc {

// one experiment, fully specified; serializes to a canonical JSON form with a
// fixed key order so that round-trips are byte-identical
struct ExperimentConfig {
    std::string kind = "spectrum";
    LatticeSpec lattice{1, 64, Boundary::TruncatedKernel, 0};
    SymbolVariant variant = SymbolVariant::FullAngle;
    ModelParams params{};
    double s = 0.9;
    std::vector<double> energies;  // meaning depends on the kind
    double epsilon = -1.0;         // negative selects the spectral-width default
    int n_realizations = 1;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";

    // kind-specific knobs; serialized always, read when relevant
    double mu = std::numeric_limits<double>::quiet_NaN();  // NaN: use E
    int grid = 0;  // fixed-point scan resolution; 0 picks the kind default
    double eta_min = 0.0, eta_max = 2.0, eta_step = 0.05;  // theta grid
    std::vector<double> epsilons;                          // sw-sum ladder
    double t_max = 20.0;                                   // evolve horizon
    int time_steps = 81;
    std::string initial = "site-center";  // or "mode:<index>"
    bool zero_disorder = false;           // evolve with V = 0
    double window_lo = std::numeric_limits<double>::quiet_NaN();  // diagnostics
    double window_hi = std::numeric_limits<double>::quiet_NaN();  // window

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;
    void validate() const;  // throws ConfigError
};

struct OutputRecord {
    std::string file;    // name inside output_dir
    std::string digest;  // fnv1a64:<16 hex digits> over the file bytes
};

struct RunManifest {
    ExperimentConfig config;
    std::string code_version;
    std::string started;   // ISO 8601 UTC; manifest only, never in data files
    std::string finished;
    std::vector<std::string> realization_seeds;  // decimal, one per realization
    int failures = 0;
    std::vector<OutputRecord> outputs;

    std::string to_json_text() const;
};

struct RunOutput {
    RunManifest manifest;
    // headline scalars for sweep summaries, in emission order
    std::vector<std::pair<std::string, double>> headline;
};

// worker count from the PHOTONLOC_WORKERS environment variable, else the
// hardware concurrency; outputs never depend on it
int worker_count();

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string digest_string(const std::string& bytes);
std::string format_g17(double v);

RunOutput run(const ExperimentConfig& config);

// one child run per value of a scalar config field, under a shared summary
RunManifest sweep(const ExperimentConfig& base, const std::string& parameter,
                  const std::vector<double>& values);

enum ExitCode : int {
    kExitOk = 0,
    kExitInvariant = 1,
    kExitConfig = 2,
    kExitResource = 3,
};

// maps the exception taxonomy onto the CLI exit codes
int exit_code_for(const std::exception& e);

}  // namespace photonloc
