// command line front end for the photonloc experiment harness
//
// One subcommand per experiment kind plus `sweep` and `print-config`.  A JSON
// config file supplies defaults; any flag given on the command line wins over
// the file.  Exit codes: 0 success, 1 invariant violation, 2 bad
// configuration, 3 resource or solver failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "photonloc/errors.hpp"
#include "photonloc/harness.hpp"

namespace {

using photonloc::ExperimentConfig;

struct CliState {
    ExperimentConfig cfg;
    std::string sweep_parameter;
    std::vector<double> sweep_values;
    std::string sweep_kind;
    bool print_only = false;
};

// registers the flags shared by every experiment subcommand; CLI11 leaves a
// field untouched unless its flag was actually passed, so the config file
// value survives as the default
void add_common_options(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--config", "JSON config file used as the base")
        ->check(CLI::ExistingFile);
    cmd->add_option("--dim", cfg.lattice.dim, "lattice dimension");
    cmd->add_option("--size", cfg.lattice.size, "sites per axis");
    cmd->add_option_function<std::string>(
           "--boundary",
           [&cfg](const std::string& v) {
               ExperimentConfig probe = ExperimentConfig::from_json_text(
                   std::string("{\"boundary\": \"") + v + "\"}");
               cfg.lattice.boundary = probe.lattice.boundary;
           },
           "periodic-symbol or truncated-kernel");
    cmd->add_option_function<std::string>(
           "--variant",
           [&cfg](const std::string& v) {
               ExperimentConfig probe = ExperimentConfig::from_json_text(
                   std::string("{\"variant\": \"") + v + "\"}");
               cfg.variant = probe.variant;
           },
           "full-angle or half-angle dispersion");
    cmd->add_option("--oversample", cfg.lattice.oversample,
                    "dual grid oversampling factor");
    cmd->add_option("--g", cfg.params.g, "coupling g");
    cmd->add_option("--rho0", cfg.params.rho0, "emitter density rho0");
    cmd->add_option("--omega", cfg.params.omega, "detuning Omega");
    cmd->add_option("--s", cfg.s, "fractional moment order in (0, 1)");
    cmd->add_option("--energies", cfg.energies, "probe energies")
        ->delimiter(',');
    cmd->add_option("--epsilon", cfg.epsilon,
                    "resolvent regularization (negative requests the default)");
    cmd->add_option("--realizations", cfg.n_realizations,
                    "number of disorder realizations");
    cmd->add_option("--seed", cfg.master_seed, "master seed");
    cmd->add_option("--out", cfg.output_dir, "output directory");
    cmd->add_option("--mu", cfg.mu, "spectral parameter mu (defaults to E)");
    cmd->add_option("--grid", cfg.grid, "scan grid resolution");
    cmd->add_option("--eta-min", cfg.eta_min, "theta grid start");
    cmd->add_option("--eta-max", cfg.eta_max, "theta grid end");
    cmd->add_option("--eta-step", cfg.eta_step, "theta grid step");
    cmd->add_option("--epsilons", cfg.epsilons,
                    "decreasing epsilon ladder for sw-sum")
        ->delimiter(',');
    cmd->add_option("--t-max", cfg.t_max, "evolution end time");
    cmd->add_option("--time-steps", cfg.time_steps, "evolution sample count");
    cmd->add_option("--initial", cfg.initial,
                    "initial state: site-center or mode:<j>");
    cmd->add_flag("--zero-disorder", cfg.zero_disorder,
                  "run with the disorder switched off");
    cmd->add_option("--window-lo", cfg.window_lo, "diagnostics window start");
    cmd->add_option("--window-hi", cfg.window_hi, "diagnostics window end");
}

// the config file must be applied before CLI11 writes flag values into cfg,
// so it is located with a manual scan over argv
void load_config_if_present(int argc, char** argv, ExperimentConfig& cfg) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config")
            cfg = ExperimentConfig::from_file(argv[i + 1]);
}

int dispatch(const CliState& state) {
    if (state.print_only) {
        std::fputs(state.cfg.to_json_text().c_str(), stdout);
        return photonloc::kExitOk;
    }
    if (!state.sweep_parameter.empty()) {
        photonloc::RunManifest manifest =
            photonloc::sweep(state.cfg, state.sweep_parameter, state.sweep_values);
        std::printf("sweep over %s: %zu runs, summary in %s/sweep_summary.tsv\n",
                    state.sweep_parameter.c_str(), state.sweep_values.size(),
                    state.cfg.output_dir.c_str());
        return photonloc::kExitOk;
    }
    photonloc::RunOutput out = photonloc::run(state.cfg);
    for (const auto& [key, value] : out.headline)
        std::printf("%s = %.17g\n", key.c_str(), value);
    std::printf("wrote %s/manifest.json\n", state.cfg.output_dir.c_str());
    return photonloc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photonloc: disordered waveguide localization experiments"};
    app.require_subcommand(1);

    CliState state;
    try {
        load_config_if_present(argc, argv, state.cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return photonloc::kExitConfig;
    }

    const std::vector<std::string> kinds = {
        "spectrum", "equivalence",         "moments",
        "theta",    "band",                "sw-sum",
        "evolve",   "two-photon-spectrum", "two-photon-band"};
    for (const std::string& kind : kinds) {
        CLI::App* cmd = app.add_subcommand(kind, "run a " + kind + " experiment");
        add_common_options(cmd, state.cfg);
        cmd->callback([&state, kind]() { state.cfg.kind = kind; });
    }

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run one experiment per parameter value");
    add_common_options(sweep_cmd, state.cfg);
    sweep_cmd->add_option("--kind", state.sweep_kind, "experiment kind to sweep");
    sweep_cmd
        ->add_option("--parameter", state.sweep_parameter,
                     "scalar config field to vary")
        ->required();
    sweep_cmd->add_option("--values", state.sweep_values, "parameter values")
        ->delimiter(',')
        ->required();
    sweep_cmd->callback([&state]() {
        if (!state.sweep_kind.empty()) state.cfg.kind = state.sweep_kind;
    });

    CLI::App* print_cmd = app.add_subcommand(
        "print-config", "echo the assembled config as canonical JSON");
    add_common_options(print_cmd, state.cfg);
    print_cmd->add_option("--kind", state.sweep_kind, "experiment kind");
    print_cmd->callback([&state]() {
        if (!state.sweep_kind.empty()) state.cfg.kind = state.sweep_kind;
        state.print_only = true;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return photonloc::kExitConfig;
    }

    try {
        return dispatch(state);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return photonloc::exit_code_for(e);
    }
}
