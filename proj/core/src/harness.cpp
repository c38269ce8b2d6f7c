#include "photonloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "photonloc/decoupling.hpp"
#include "photonloc/diagnostics.hpp"
#include "photonloc/disorder.hpp"
#include "photonloc/errors.hpp"
#include "photonloc/linalg.hpp"
#include "photonloc/moments.hpp"
#include "photonloc/two_photon.hpp"

namespace photonloc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest_string(const std::string& bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

int worker_count() {
    if (const char* env = std::getenv("PHOTONLOC_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 1024)
            throw ConfigError("PHOTONLOC_WORKERS must be an integer in [1, 1024]");
        return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

std::string timestamp_utc() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string code_version() {
#ifdef PHOTONLOC_VERSION
    return std::string("photonloc ") + PHOTONLOC_VERSION;
#else
    return "photonloc dev";
#endif
}

// tabular text accumulated in memory so the digest covers exactly the bytes
// that reach disk
class Table {
  public:
    Table(std::string name, const std::vector<std::string>& columns)
        : name_(std::move(name)), n_cols_(columns.size()) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) buf_ += '\t';
            buf_ += columns[i];
        }
        buf_ += '\n';
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != n_cols_)
            throw std::logic_error("table row width mismatch in " + name_);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ += '\t';
            buf_ += cells[i];
        }
        buf_ += '\n';
    }

    OutputRecord write(const std::string& dir) const {
        const fs::path path = fs::path(dir) / name_;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        out.close();
        if (!out) throw std::runtime_error("short write to " + path.string());
        return {name_, digest_string(buf_)};
    }

  private:
    std::string name_;
    std::string buf_;
    std::size_t n_cols_;
};

std::string fmt_int(long long v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "1" : "0"; }

template <typename Fn>
void parallel_realizations(int n, int workers, Fn&& fn) {
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr fatal = nullptr;
    std::mutex lock;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(lock);
                if (!fatal) fatal = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);
}

// theta tables are pure in s and moderately expensive; share them per process
const ThetaTable& theta_table_for(double s) {
    static std::mutex lock;
    static std::map<double, ThetaTable> cache;
    std::lock_guard<std::mutex> lk(lock);
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, build_theta_table(s)).first;
    return it->second;
}

int centre_site(const LatticeSpec& spec) {
    std::vector<int> c(spec.dim, (spec.size - 1) / 2);
    return site_index(spec, c);
}

double infinity_norm(const Eigen::MatrixXd& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// ---------------------------------------------------------------- config i/o

const char* boundary_name(Boundary b) {
    return b == Boundary::PeriodicSymbol ? "periodic-symbol" : "truncated-kernel";
}

Boundary boundary_from(const std::string& name) {
    if (name == "periodic-symbol") return Boundary::PeriodicSymbol;
    if (name == "truncated-kernel") return Boundary::TruncatedKernel;
    throw ConfigError("unknown boundary: " + name);
}

const char* variant_name(SymbolVariant v) {
    return v == SymbolVariant::FullAngle ? "full-angle" : "half-angle";
}

SymbolVariant variant_from(const std::string& name) {
    if (name == "full-angle") return SymbolVariant::FullAngle;
    if (name == "half-angle") return SymbolVariant::HalfAngle;
    throw ConfigError("unknown symbol variant: " + name);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "kind",       "dim",          "size",           "boundary",
        "variant",    "oversample",   "g",              "rho0",
        "omega",      "s",            "energies",       "epsilon",
        "n_realizations", "master_seed", "output_dir",  "mu",
        "grid",       "eta_min",      "eta_max",        "eta_step",
        "epsilons",   "t_max",        "time_steps",     "initial",
        "zero_disorder", "window_lo", "window_hi"};
    return keys;
}

const std::set<std::string>& known_kinds() {
    static const std::set<std::string> kinds = {
        "spectrum", "equivalence",       "moments",
        "theta",    "band",              "sw-sum",
        "evolve",   "two-photon-spectrum", "two-photon-band"};
    return kinds;
}

ordered_json nullable(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double from_nullable(const ordered_json& j, const char* key) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number or null");
    return j.get<double>();
}

}  // namespace

std::string ExperimentConfig::to_json_text() const {
    ordered_json j;
    j["kind"] = kind;
    j["dim"] = lattice.dim;
    j["size"] = lattice.size;
    j["boundary"] = boundary_name(lattice.boundary);
    j["variant"] = variant_name(variant);
    j["oversample"] = lattice.oversample;
    j["g"] = params.g;
    j["rho0"] = params.rho0;
    j["omega"] = params.omega;
    j["s"] = s;
    j["energies"] = energies;
    j["epsilon"] = epsilon;
    j["n_realizations"] = n_realizations;
    j["master_seed"] = master_seed;
    j["output_dir"] = output_dir;
    j["mu"] = nullable(mu);
    j["grid"] = grid;
    j["eta_min"] = eta_min;
    j["eta_max"] = eta_max;
    j["eta_step"] = eta_step;
    j["epsilons"] = epsilons;
    j["t_max"] = t_max;
    j["time_steps"] = time_steps;
    j["initial"] = initial;
    j["zero_disorder"] = zero_disorder;
    j["window_lo"] = nullable(window_lo);
    j["window_hi"] = nullable(window_hi);
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    for (const auto& item : j.items())
        if (!known_keys().count(item.key()))
            throw ConfigError("unknown config key: " + item.key());

    ExperimentConfig cfg;
    try {
        if (j.contains("kind")) cfg.kind = j["kind"].get<std::string>();
        if (j.contains("dim")) cfg.lattice.dim = j["dim"].get<int>();
        if (j.contains("size")) cfg.lattice.size = j["size"].get<int>();
        if (j.contains("boundary"))
            cfg.lattice.boundary = boundary_from(j["boundary"].get<std::string>());
        if (j.contains("variant"))
            cfg.variant = variant_from(j["variant"].get<std::string>());
        if (j.contains("oversample"))
            cfg.lattice.oversample = j["oversample"].get<int>();
        if (j.contains("g")) cfg.params.g = j["g"].get<double>();
        if (j.contains("rho0")) cfg.params.rho0 = j["rho0"].get<double>();
        if (j.contains("omega")) cfg.params.omega = j["omega"].get<double>();
        if (j.contains("s")) cfg.s = j["s"].get<double>();
        if (j.contains("energies"))
            cfg.energies = j["energies"].get<std::vector<double>>();
        if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
        if (j.contains("n_realizations"))
            cfg.n_realizations = j["n_realizations"].get<int>();
        if (j.contains("master_seed"))
            cfg.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("output_dir"))
            cfg.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("mu")) cfg.mu = from_nullable(j["mu"], "mu");
        if (j.contains("grid")) cfg.grid = j["grid"].get<int>();
        if (j.contains("eta_min")) cfg.eta_min = j["eta_min"].get<double>();
        if (j.contains("eta_max")) cfg.eta_max = j["eta_max"].get<double>();
        if (j.contains("eta_step")) cfg.eta_step = j["eta_step"].get<double>();
        if (j.contains("epsilons"))
            cfg.epsilons = j["epsilons"].get<std::vector<double>>();
        if (j.contains("t_max")) cfg.t_max = j["t_max"].get<double>();
        if (j.contains("time_steps")) cfg.time_steps = j["time_steps"].get<int>();
        if (j.contains("initial")) cfg.initial = j["initial"].get<std::string>();
        if (j.contains("zero_disorder"))
            cfg.zero_disorder = j["zero_disorder"].get<bool>();
        if (j.contains("window_lo"))
            cfg.window_lo = from_nullable(j["window_lo"], "window_lo");
        if (j.contains("window_hi"))
            cfg.window_hi = from_nullable(j["window_hi"], "window_hi");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void ExperimentConfig::validate() const {
    if (!known_kinds().count(kind)) throw ConfigError("unknown experiment kind: " + kind);
    try {
        lattice.validate();
        params.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (s <= 0.0 || s >= 1.0) throw ConfigError("s must lie in (0, 1)");
    if (n_realizations < 0) throw ConfigError("n_realizations must be nonnegative");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");

    const bool needs_energy = kind == "moments" || kind == "sw-sum";
    if (needs_energy && energies.empty())
        throw ConfigError(kind + " needs at least one entry in 'energies'");
    if (kind == "theta") {
        if (eta_min < 0.0 || eta_max <= eta_min || eta_step <= 0.0)
            throw ConfigError("theta grid needs 0 <= eta_min < eta_max and step > 0");
    }
    if (kind == "evolve") {
        if (time_steps < 2 || t_max <= 0.0)
            throw ConfigError("evolve needs t_max > 0 and time_steps >= 2");
        if (initial != "site-center" && initial.rfind("mode:", 0) != 0)
            throw ConfigError("initial must be 'site-center' or 'mode:<index>'");
        if (initial.rfind("mode:", 0) == 0) {
            if (lattice.dim != 1)
                throw ConfigError("mode initial states are d=1 only");
            char* end = nullptr;
            const long v = std::strtol(initial.c_str() + 5, &end, 10);
            if (*end != '\0' || v < 0 || v >= lattice.size)
                throw ConfigError("mode index must lie in [0, size)");
        }
    }
    if (kind == "two-photon-band" && lattice.dim != 1)
        throw ConfigError("two-photon band constants are d=1 only");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (epsilons[i] <= 0.0) throw ConfigError("epsilons must be positive");
        if (i > 0 && epsilons[i] >= epsilons[i - 1])
            throw ConfigError("epsilons must be strictly decreasing");
    }
}

std::string RunManifest::to_json_text() const {
    ordered_json j;
    j["config"] = ordered_json::parse(config.to_json_text());
    j["code_version"] = code_version;
    j["started"] = started;
    j["finished"] = finished;
    j["realization_seeds"] = realization_seeds;
    j["failures"] = failures;
    ordered_json outs = ordered_json::array();
    for (const auto& rec : outputs)
        outs.push_back(ordered_json{{"file", rec.file}, {"digest", rec.digest}});
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

// ------------------------------------------------------------ experiments

namespace {

void note(RunOutput& out, const std::string& key, double value) {
    out.headline.emplace_back(key, value);
}

void run_spectrum(const ExperimentConfig& cfg, RunOutput& out) {
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    double wlo = cfg.window_lo, whi = cfg.window_hi;
    if (std::isnan(wlo) || std::isnan(whi)) {
        // diagnostics window defaults to the predicted localization band
        const double c_s = kernel_s_norm(kernel, cfg.s).total;
        const ThetaTable& theta = theta_table_for(cfg.s);
        const double K = theta.kappa_hat / std::pow(c_s, 1.0 / cfg.s);
        wlo = cfg.params.omega - K * cfg.params.coupling_sq();
        whi = cfg.params.omega + K * cfg.params.coupling_sq();
    }

    const int n = std::max(1, cfg.n_realizations);
    struct Slot {
        std::vector<double> eigenvalues;
        EigenstateDiagnostics diag;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n));
    parallel_realizations(n, worker_count(), [&](int i) {
        DisorderField field =
            sample_field(cfg.lattice, cfg.master_seed, static_cast<std::uint64_t>(i));
        OnePhotonOperator op = build_one_photon(kernel, field, cfg.params);
        SpectralResult sp = spectrum_symmetric(op.H);
        auto& slot = slots[static_cast<std::size_t>(i)];
        for (int k = 0; k < sp.eigenvalues.size(); ++k)
            slot.eigenvalues.push_back(sp.eigenvalues[k]);
        if (cfg.lattice.dim == 1)
            slot.diag = analyze_eigenstates(sp, cfg.lattice, wlo, whi);
    });

    Table spectrum_table("spectrum.tsv", {"realization", "index", "energy"});
    Table states_table("states.tsv", {"realization", "energy", "ipr", "xi",
                                      "r_squared", "fit_accepted"});
    std::vector<double> pooled_ratios;
    double ipr_sum = 0;
    long long in_window = 0, fits_accepted = 0;
    for (int i = 0; i < n; ++i) {
        const auto& slot = slots[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < slot.eigenvalues.size(); ++k)
            spectrum_table.row({fmt_int(i), fmt_int(static_cast<long long>(k)),
                                format_g17(slot.eigenvalues[k])});
        const auto& d = slot.diag;
        for (std::size_t k = 0; k < d.energy.size(); ++k) {
            states_table.row({fmt_int(i), format_g17(d.energy[k]),
                              format_g17(d.ipr_value[k]), format_g17(d.xi[k]),
                              format_g17(d.r_squared[k]),
                              fmt_bool(d.fit_accepted[k] != 0)});
            ipr_sum += d.ipr_value[k];
            ++in_window;
            if (d.fit_accepted[k]) ++fits_accepted;
        }
        const std::vector<double> r = spacing_ratios(d.energy);
        pooled_ratios.insert(pooled_ratios.end(), r.begin(), r.end());
    }
    out.manifest.outputs.push_back(spectrum_table.write(cfg.output_dir));
    out.manifest.outputs.push_back(states_table.write(cfg.output_dir));

    double r_mean = std::numeric_limits<double>::quiet_NaN();
    if (pooled_ratios.size() >= 50) {
        r_mean = 0;
        for (double v : pooled_ratios) r_mean += v;
        r_mean /= static_cast<double>(pooled_ratios.size());
    }
    note(out, "window_lo", wlo);
    note(out, "window_hi", whi);
    note(out, "r_mean", r_mean);
    note(out, "ipr_mean", in_window ? ipr_sum / in_window
                                    : std::numeric_limits<double>::quiet_NaN());
    note(out, "fit_fraction",
         in_window ? static_cast<double>(fits_accepted) / in_window
                   : std::numeric_limits<double>::quiet_NaN());
    note(out, "in_window_states", static_cast<double>(in_window));
}

void run_equivalence(const ExperimentConfig& cfg, RunOutput& out) {
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    const int n = std::max(1, cfg.n_realizations);
    const int grid = cfg.grid > 0 ? cfg.grid : 256;

    struct Row {
        double E, smin, heff_norm, lift;
        bool recovered;
    };
    std::vector<std::vector<Row>> slots(static_cast<std::size_t>(n));
    std::vector<double> recovery(static_cast<std::size_t>(n), 0.0);

    parallel_realizations(n, worker_count(), [&](int i) {
        DisorderField field =
            sample_field(cfg.lattice, cfg.master_seed, static_cast<std::uint64_t>(i));
        OnePhotonOperator op = build_one_photon(kernel, field, cfg.params);
        SpectralResult sp = spectrum_symmetric(op.H);
        const double lo = sp.eigenvalues.minCoeff() - 0.5;
        const double hi = sp.eigenvalues.maxCoeff() + 0.5;
        FixedPointScan scan =
            effective_fixed_points(kernel, field, cfg.params, lo, hi, grid, 1e-9);

        auto& rows = slots[static_cast<std::size_t>(i)];
        int matched = 0, considered = 0;
        for (int k = 0; k < sp.eigenvalues.size(); ++k) {
            const double E = sp.eigenvalues[k];
            if (std::abs(E - cfg.params.omega) <= 1e-6) continue;
            EquivalenceProbe probe = equivalence_probe(kernel, field, cfg.params, E);
            const double heff_norm =
                infinity_norm(build_effective(kernel, field, cfg.params, E).H);
            bool recovered = false;
            for (double fp : scan.fixed_points)
                if (std::abs(fp - E) <= 1e-6) {
                    recovered = true;
                    break;
                }
            rows.push_back({E, probe.smin_effective, heff_norm, probe.lift_residual,
                            recovered});
            ++considered;
            if (recovered) ++matched;
        }
        recovery[static_cast<std::size_t>(i)] =
            considered ? static_cast<double>(matched) / considered : 1.0;
    });

    Table table("equivalence.tsv", {"realization", "E", "smin_effective",
                                    "effective_norm", "lift_residual", "recovered"});
    double worst_ratio = 0, recovery_min = 1.0;
    for (int i = 0; i < n; ++i) {
        for (const Row& r : slots[static_cast<std::size_t>(i)]) {
            table.row({fmt_int(i), format_g17(r.E), format_g17(r.smin),
                       format_g17(r.heff_norm), format_g17(r.lift),
                       fmt_bool(r.recovered)});
            worst_ratio = std::max(worst_ratio, r.smin / r.heff_norm);
        }
        recovery_min = std::min(recovery_min, recovery[static_cast<std::size_t>(i)]);
    }
    out.manifest.outputs.push_back(table.write(cfg.output_dir));
    note(out, "worst_rel_smin", worst_ratio);
    note(out, "recovery_min", recovery_min);
}

void run_moments(const ExperimentConfig& cfg, RunOutput& out) {
    const double E = cfg.energies.at(0);
    const double mu = std::isnan(cfg.mu) ? E : cfg.mu;
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);

    double epsilon = cfg.epsilon;
    if (epsilon < 0.0) {
        // default regularization: 1e-3 of the level spacing scale of H_mu
        DisorderField field0 = sample_field(cfg.lattice, cfg.master_seed, 0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            build_effective(kernel, field0, cfg.params, mu).H,
            Eigen::EigenvaluesOnly);
        const double width =
            es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
        epsilon = 1e-3 * width / cfg.lattice.sites();
    }

    MomentReport report =
        moment_ensemble(cfg.lattice, cfg.variant, cfg.params, mu, E, cfg.s, epsilon,
                        cfg.n_realizations, cfg.master_seed, worker_count());
    const double c_s = kernel_s_norm(kernel, cfg.s).total;
    const ThetaTable& theta = theta_table_for(cfg.s);
    report.criterion = criterion_one_photon(cfg.params, mu, E, cfg.s, c_s, theta);
    report.Ds = apriori_Ds(cfg.params, E, cfg.s);
    report.predicted = report.criterion < 1.0;

    double xi_bound = std::numeric_limits<double>::quiet_NaN();
    bool xi_verdict = false;
    if (report.predicted) {
        XiBoundVerdict v = xi_bound_check(report, report.Ds, report.criterion);
        xi_bound = v.bound;
        xi_verdict = v.verdict;
    }

    Table profile("moments.tsv",
                  {"distance", "moment_estimate", "mom_error_low", "mom_error_high"});
    for (std::size_t i = 0; i < report.distance.size(); ++i)
        profile.row({format_g17(report.distance[i]), format_g17(report.moment[i]),
                     format_g17(report.err_low[i]), format_g17(report.err_high[i])});
    out.manifest.outputs.push_back(profile.write(cfg.output_dir));

    Table summary("moments_summary.tsv",
                  {"s", "E", "mu", "epsilon", "realizations", "failures", "xi_hat",
                   "xi_hat_se", "slope", "slope_half_width", "slope_valid",
                   "criterion", "Ds", "predicted", "xi_bound", "xi_verdict"});
    summary.row({format_g17(report.s), format_g17(report.E), format_g17(report.mu),
                 format_g17(report.epsilon), fmt_int(report.realizations),
                 fmt_int(report.failures), format_g17(report.xi_hat),
                 format_g17(report.xi_hat_se), format_g17(report.slope),
                 format_g17(report.slope_half_width), fmt_bool(report.slope_valid),
                 format_g17(report.criterion), format_g17(report.Ds),
                 fmt_bool(report.predicted), format_g17(xi_bound),
                 fmt_bool(xi_verdict)});
    out.manifest.outputs.push_back(summary.write(cfg.output_dir));

    out.manifest.failures = report.failures;
    note(out, "criterion", report.criterion);
    note(out, "xi_hat", report.xi_hat);
    note(out, "slope", report.slope);
    note(out, "slope_half_width", report.slope_half_width);
    note(out, "xi_verdict", xi_verdict ? 1.0 : 0.0);
}

void run_theta(const ExperimentConfig& cfg, RunOutput& out) {
    std::vector<double> etas;
    for (double eta = cfg.eta_min; eta <= cfg.eta_max + 1e-12; eta += cfg.eta_step)
        etas.push_back(std::min(eta, cfg.eta_max));

    std::vector<ThetaEstimate> estimates(etas.size());
    parallel_realizations(static_cast<int>(etas.size()), worker_count(), [&](int i) {
        estimates[static_cast<std::size_t>(i)] =
            theta_s_estimate(cfg.s, etas[static_cast<std::size_t>(i)]);
    });

    Table table("theta.tsv", {"eta", "theta_hat", "argmin_beta_re", "argmin_beta_im"});
    double theta_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < etas.size(); ++i) {
        const ThetaEstimate& est = estimates[i];
        table.row({format_g17(est.eta), format_g17(est.theta_hat),
                   format_g17(est.argmin_beta.real()),
                   format_g17(est.argmin_beta.imag())});
        theta_min = std::min(theta_min, est.theta_hat);
        if (est.theta_hat <= 0.0 || est.theta_hat > est.eta + 1.0)
            throw InvariantViolation("theta estimate left (0, eta + 1]");
        if (est.theta_hat < std::max(est.eta - 1.0, 0.0) - 1e-12)
            throw InvariantViolation("theta estimate fell below its envelope floor");
    }
    out.manifest.outputs.push_back(table.write(cfg.output_dir));
    note(out, "theta_min", theta_min);
}

void run_band(const ExperimentConfig& cfg, RunOutput& out) {
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    SNormReport c_s = kernel_s_norm(kernel, cfg.s);
    const ThetaTable& theta = theta_table_for(cfg.s);
    BandConstants bc = band_constants_one_photon(cfg.params, cfg.s, c_s.total,
                                                 theta.kappa_hat, theta);
    const double half_width = bc.K * cfg.params.coupling_sq();

    Table table("band.tsv",
                {"s", "c_s_box", "c_s_tail", "c_s_total", "kappa_hat", "K",
                 "band_lo", "band_hi", "E0", "scan_ok", "overlap_C",
                 "overlap_applicable", "overlap_ok"});
    table.row({format_g17(cfg.s), format_g17(c_s.box_value),
               format_g17(c_s.tail_bound), format_g17(c_s.total),
               format_g17(theta.kappa_hat), format_g17(bc.K),
               format_g17(cfg.params.omega - half_width),
               format_g17(cfg.params.omega + half_width), format_g17(bc.E0),
               fmt_bool(bc.scan_ok), format_g17(bc.overlap_C),
               fmt_bool(bc.overlap_applicable), fmt_bool(bc.overlap_ok)});
    out.manifest.outputs.push_back(table.write(cfg.output_dir));

    note(out, "K", bc.K);
    note(out, "band_lo", cfg.params.omega - half_width);
    note(out, "band_hi", cfg.params.omega + half_width);
    note(out, "E0", bc.E0);
    note(out, "overlap_C", bc.overlap_C);
}

void run_sw_sum(const ExperimentConfig& cfg, RunOutput& out) {
    const double E = cfg.energies.at(0);
    const double mu = std::isnan(cfg.mu) ? E : cfg.mu;
    std::vector<double> eps = cfg.epsilons;
    if (eps.empty()) eps = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};

    LatticeSpec doubled = cfg.lattice;
    doubled.size = 2 * cfg.lattice.size - 1;  // shares the centered sites
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    HoppingKernel kernel2 = build_kernel(doubled, cfg.variant);
    const int x0 = centre_site(cfg.lattice);
    const int x0d = centre_site(doubled);

    const int n = std::max(1, cfg.n_realizations);
    struct Slot {
        std::vector<double> base, big;
        double exponent = 0;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n));
    parallel_realizations(n, worker_count(), [&](int i) {
        DisorderField field =
            sample_field(cfg.lattice, cfg.master_seed, static_cast<std::uint64_t>(i));
        DisorderField field2 =
            sample_field(doubled, cfg.master_seed, static_cast<std::uint64_t>(i));
        auto& slot = slots[static_cast<std::size_t>(i)];
        SimonWolffReport base = simon_wolff_sum(
            build_effective(kernel, field, cfg.params, mu).H, x0, E, eps);
        SimonWolffReport big = simon_wolff_sum(
            build_effective(kernel2, field2, cfg.params, mu).H, x0d, E, eps);
        slot.base = base.sums;
        slot.big = big.sums;
        slot.exponent = base.growth_exponent;
    });

    Table table("sw_sum.tsv",
                {"realization", "epsilon", "sum", "sum_doubled"});
    double exp_mean = 0, mismatch = 0;
    for (int i = 0; i < n; ++i) {
        const auto& slot = slots[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < eps.size(); ++k)
            table.row({fmt_int(i), format_g17(eps[k]), format_g17(slot.base[k]),
                       format_g17(slot.big[k])});
        exp_mean += slot.exponent;
        mismatch += std::abs(slot.big.back() - slot.base.back()) / slot.base.back();
    }
    exp_mean /= n;
    mismatch /= n;
    out.manifest.outputs.push_back(table.write(cfg.output_dir));
    note(out, "growth_exponent", exp_mean);
    note(out, "size_mismatch", mismatch);
}

void run_evolve(const ExperimentConfig& cfg, RunOutput& out) {
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    const int N = cfg.lattice.sites();
    DisorderField field =
        cfg.zero_disorder
            ? field_from_values(cfg.lattice, Eigen::VectorXd::Zero(N))
            : sample_field(cfg.lattice, cfg.master_seed, 0);
    OnePhotonOperator op = build_one_photon(kernel, field, cfg.params);

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(2 * N);
    if (cfg.initial == "site-center") {
        psi0[centre_site(cfg.lattice)] = 1.0;
    } else {
        const int j = static_cast<int>(std::strtol(cfg.initial.c_str() + 5, nullptr, 10));
        const double k = 2.0 * std::numbers::pi * j / cfg.lattice.size;
        for (int x = 0; x < N; ++x)
            psi0[x] = std::polar(1.0 / std::sqrt(double(N)), k * x);
    }

    std::vector<double> times(static_cast<std::size_t>(cfg.time_steps));
    for (int i = 0; i < cfg.time_steps; ++i)
        times[static_cast<std::size_t>(i)] = cfg.t_max * i / (cfg.time_steps - 1);

    EvolutionTrace trace = evolve(op.H, cfg.lattice, psi0, times);

    double drift = 0;
    for (double v : trace.total_norm) drift = std::max(drift, std::abs(v - 1.0));
    if (!trace.used_expm && drift >= 1e-10)
        throw InvariantViolation("one-photon evolution norm drift exceeded 1e-10");

    Table table("evolve.tsv", {"time", "total_norm", "photon_probability",
                               "atom_probability", "photon_second_moment"});
    for (std::size_t k = 0; k < times.size(); ++k)
        table.row({format_g17(trace.times[k]), format_g17(trace.total_norm[k]),
                   format_g17(trace.photon_probability[k]),
                   format_g17(trace.atom_probability[k]),
                   format_g17(trace.photon_second_moment[k])});
    out.manifest.outputs.push_back(table.write(cfg.output_dir));

    note(out, "norm_drift", drift);
    note(out, "m2_final", trace.photon_second_moment.back());
    note(out, "m2_mid",
         trace.photon_second_moment[trace.photon_second_moment.size() / 2]);
}

void run_two_photon_spectrum(const ExperimentConfig& cfg, RunOutput& out) {
    HoppingKernel kernel = build_kernel(cfg.lattice, cfg.variant);
    const int n = std::max(1, cfg.n_realizations);
    std::vector<TwoPhotonEquivalence> slots(static_cast<std::size_t>(n));
    parallel_realizations(n, worker_count(), [&](int i) {
        DisorderField field =
            sample_field(cfg.lattice, cfg.master_seed, static_cast<std::uint64_t>(i));
        slots[static_cast<std::size_t>(i)] =
            two_photon_equivalence(kernel, field, cfg.params);
    });

    Table table("two_photon_spectrum.tsv",
                {"realization", "E", "smin_effective", "effective_norm",
                 "reconstruction_residual"});
    double worst_ratio = 0, worst_recon = 0, nonreal_mean = 0;
    for (int i = 0; i < n; ++i) {
        const auto& eq = slots[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < eq.energies.size(); ++k) {
            table.row({fmt_int(i), format_g17(eq.energies[k]),
                       format_g17(eq.smin_effective[k]),
                       format_g17(eq.effective_norm[k]),
                       format_g17(eq.reconstruction[k])});
            worst_ratio =
                std::max(worst_ratio, eq.smin_effective[k] / eq.effective_norm[k]);
            worst_recon = std::max(worst_recon, eq.reconstruction[k]);
        }
        nonreal_mean += eq.nonreal_fraction;
    }
    nonreal_mean /= n;
    out.manifest.outputs.push_back(table.write(cfg.output_dir));
    note(out, "worst_rel_smin", worst_ratio);
    note(out, "worst_reconstruction", worst_recon);
    note(out, "nonreal_fraction", nonreal_mean);
}

void run_two_photon_band(const ExperimentConfig& cfg, RunOutput& out) {
    PairKernelConstants constants =
        pair_kernel_constants(cfg.variant, cfg.lattice.size, cfg.s);
    TwoPhotonBand band = two_photon_band(cfg.params, cfg.s, constants);

    Table table("two_photon_band.tsv",
                {"s", "c1_box", "c1_tail", "c1_total", "c2_box", "c2_tail",
                 "c2_total", "threshold", "has_band", "radius", "center"});
    table.row({format_g17(cfg.s), format_g17(constants.c1.box_value),
               format_g17(constants.c1.tail_bound), format_g17(constants.c1.total),
               format_g17(constants.c2.box_value),
               format_g17(constants.c2.tail_bound), format_g17(constants.c2.total),
               format_g17(band.threshold), fmt_bool(band.has_band),
               format_g17(band.radius), format_g17(band.center)});
    out.manifest.outputs.push_back(table.write(cfg.output_dir));

    note(out, "threshold", band.threshold);
    note(out, "radius", band.has_band ? band.radius
                                      : std::numeric_limits<double>::quiet_NaN());
    note(out, "c1_total", constants.c1.total);
    note(out, "c2_total", constants.c2.total);
}

int seed_count(const ExperimentConfig& cfg) {
    if (cfg.kind == "theta" || cfg.kind == "band" || cfg.kind == "two-photon-band")
        return 0;
    if (cfg.kind == "evolve") return cfg.zero_disorder ? 0 : 1;
    return std::max(1, cfg.n_realizations);
}

}  // namespace

RunOutput run(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.output_dir);

    RunOutput out;
    out.manifest.config = config;
    out.manifest.code_version = code_version();
    out.manifest.started = timestamp_utc();
    for (int i = 0; i < seed_count(config); ++i)
        out.manifest.realization_seeds.push_back(std::to_string(
            stream_seed(config.master_seed, static_cast<std::uint64_t>(i))));

    if (config.kind == "spectrum")
        run_spectrum(config, out);
    else if (config.kind == "equivalence")
        run_equivalence(config, out);
    else if (config.kind == "moments")
        run_moments(config, out);
    else if (config.kind == "theta")
        run_theta(config, out);
    else if (config.kind == "band")
        run_band(config, out);
    else if (config.kind == "sw-sum")
        run_sw_sum(config, out);
    else if (config.kind == "evolve")
        run_evolve(config, out);
    else if (config.kind == "two-photon-spectrum")
        run_two_photon_spectrum(config, out);
    else if (config.kind == "two-photon-band")
        run_two_photon_band(config, out);
    else
        throw ConfigError("unknown experiment kind: " + config.kind);

    out.manifest.finished = timestamp_utc();
    const std::string manifest_text = out.manifest.to_json_text();
    std::ofstream mf(fs::path(config.output_dir) / "manifest.json",
                     std::ios::binary | std::ios::trunc);
    if (!mf) throw std::runtime_error("cannot write manifest.json");
    mf.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
    return out;
}

namespace {

void apply_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
    auto as_int = [&](const char* what) {
        const double r = std::round(value);
        if (std::abs(value - r) > 1e-9)
            throw ConfigError(std::string("sweep value for ") + what +
                              " must be an integer");
        return static_cast<int>(r);
    };
    if (name == "size")
        cfg.lattice.size = as_int("size");
    else if (name == "dim")
        cfg.lattice.dim = as_int("dim");
    else if (name == "oversample")
        cfg.lattice.oversample = as_int("oversample");
    else if (name == "g")
        cfg.params.g = value;
    else if (name == "rho0")
        cfg.params.rho0 = value;
    else if (name == "omega")
        cfg.params.omega = value;
    else if (name == "s")
        cfg.s = value;
    else if (name == "epsilon")
        cfg.epsilon = value;
    else if (name == "E")
        cfg.energies = {value};
    else if (name == "mu")
        cfg.mu = value;
    else if (name == "t_max")
        cfg.t_max = value;
    else if (name == "time_steps")
        cfg.time_steps = as_int("time_steps");
    else if (name == "n_realizations")
        cfg.n_realizations = as_int("n_realizations");
    else if (name == "master_seed")
        cfg.master_seed = static_cast<std::uint64_t>(as_int("master_seed"));
    else if (name == "eta_max")
        cfg.eta_max = value;
    else if (name == "eta_step")
        cfg.eta_step = value;
    else if (name == "grid")
        cfg.grid = as_int("grid");
    else if (name == "window_lo")
        cfg.window_lo = value;
    else if (name == "window_hi")
        cfg.window_hi = value;
    else
        throw ConfigError("sweep parameter does not name a scalar field: " + name);
}

}  // namespace

RunManifest sweep(const ExperimentConfig& base, const std::string& parameter,
                  const std::vector<double>& values) {
    // fail early on an unknown parameter, before any child runs
    {
        ExperimentConfig probe = base;
        apply_parameter(probe, parameter, values.empty() ? 0.0 : values.front());
    }
    fs::create_directories(base.output_dir);

    RunManifest manifest;
    manifest.config = base;
    manifest.code_version = code_version();
    manifest.started = timestamp_utc();

    struct ChildResult {
        double value;
        int status;
        std::vector<std::pair<std::string, double>> headline;
    };
    std::vector<ChildResult> children;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ExperimentConfig child = base;
        apply_parameter(child, parameter, values[i]);
        char dir[32];
        std::snprintf(dir, sizeof(dir), "run_%03zu", i);
        child.output_dir = (fs::path(base.output_dir) / dir).string();
        ChildResult result{values[i], kExitOk, {}};
        try {
            RunOutput ro = run(child);
            result.headline = std::move(ro.headline);
            manifest.failures += ro.manifest.failures;
            for (const auto& rec : ro.manifest.outputs)
                manifest.outputs.push_back(
                    {(fs::path(dir) / rec.file).string(), rec.digest});
        } catch (const std::exception& e) {
            result.status = exit_code_for(e);
        }
        children.push_back(std::move(result));
    }

    // union of headline keys in first-seen order
    std::vector<std::string> keys;
    for (const auto& child : children)
        for (const auto& [k, v] : child.headline)
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                keys.push_back(k);

    std::vector<std::string> columns = {parameter, "status"};
    columns.insert(columns.end(), keys.begin(), keys.end());
    Table summary("sweep_summary.tsv", columns);
    for (const auto& child : children) {
        std::vector<std::string> cells = {format_g17(child.value),
                                          fmt_int(child.status)};
        for (const std::string& k : keys) {
            double v = std::numeric_limits<double>::quiet_NaN();
            for (const auto& [hk, hv] : child.headline)
                if (hk == k) {
                    v = hv;
                    break;
                }
            cells.push_back(format_g17(v));
        }
        summary.row(cells);
    }
    manifest.outputs.insert(manifest.outputs.begin(),
                            summary.write(base.output_dir));

    manifest.finished = timestamp_utc();
    const std::string text = manifest.to_json_text();
    std::ofstream mf(fs::path(base.output_dir) / "sweep_manifest.json",
                     std::ios::binary | std::ios::trunc);
    mf.write(text.data(), static_cast<std::streamsize>(text.size()));
    return manifest;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const InvariantViolation*>(&e)) return kExitInvariant;
    if (dynamic_cast<const BudgetExceeded*>(&e)) return kExitResource;
    if (dynamic_cast<const SolverFailure*>(&e)) return kExitResource;
    if (dynamic_cast<const SingularAtE*>(&e)) return kExitResource;
    if (dynamic_cast<const QuadratureFailure*>(&e)) return kExitResource;
    if (dynamic_cast<const MuAtResonance*>(&e)) return kExitConfig;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfig;
    if (dynamic_cast<const std::domain_error*>(&e)) return kExitConfig;
    return kExitInvariant;
}

}  // namespace photonloc
