#include "npt/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace npt::cli {

namespace {

const std::pair<const char*, const char*> kSubcommands[] = {
    {"simulate", "one trajectory -> trajectory.csv"},
    {"convergence", "weak-error levels and fitted slopes -> convergence.csv"},
    {"virial", "E1/E2 virial errors over p0_list -> virial.csv"},
    {"histogram", "empirical volume density -> histogram.csv"},
    {"ti", "thermodynamic-integration reference density -> ti.csv"},
    {"exact-density", "exact free-gas volume density -> exact_density.csv"},
};

/// Option values as parsed, before enum conversion.
struct RawOptions {
    std::string scheme, field, friction, momenta, coupling;
};

void bind_options(CLI::App& app, ExperimentConfig& c, RawOptions& raw, std::string& out_dir) {
    app.option_defaults()->always_capture_default();
    raw.scheme = std::string(scheme_name(c.scheme));
    raw.field = std::string(field_kind_name(c.field));
    raw.friction = std::string(friction_kind_name(c.friction));
    raw.momenta = std::string(momentum_init_name(c.momenta));
    raw.coupling = std::string(coupling_name(c.coupling));

    app.add_option("--scheme", raw.scheme, "em | trotter | thirds | splitting2 | nvt")
        ->required()
        ->check(CLI::IsMember({"em", "trotter", "thirds", "splitting2", "nvt"}));
    app.add_option("--field", raw.field, "free | quartic | lj")
        ->required()
        ->check(CLI::IsMember({"free", "quartic", "lj"}));
    app.add_option("--n,--N", c.n, "number of particles")->required();
    app.add_option("--beta", c.beta, "inverse temperature")->required();
    app.add_option("--p0", c.p0, "target pressure")->required();
    app.add_option("--dt", c.dt, "time step")->required();

    app.add_option("--quartic_weight", c.quartic_weight, "quartic bump weight w");
    app.add_option("--lj_cutoff", c.lj_cutoff, "minimum LJ cutoff; the cutoff is max(L/2, this)");
    app.add_option("--mass", c.mass, "particle mass");
    app.add_option("--gamma", c.gamma, "particle friction");
    app.add_option("--friction", raw.friction, "volume friction: lambda | rescaling")
        ->check(CLI::IsMember({"lambda", "rescaling"}));
    app.add_option("--lambda", c.lambda, "volume mobility, gamma(V) = 1/(lambda V^2)");
    app.add_option("--tau_p", c.tau_p, "cell-rescaling time constant");
    app.add_option("--beta_t", c.beta_t, "cell-rescaling compressibility");

    app.add_option("--steps", c.steps, "trajectory length in steps");
    app.add_option("--burn_in", c.burn_in, "steps discarded before sampling");
    app.add_option("--stride", c.stride, "sample every stride steps");
    app.add_option("--t_end", c.t_end, "terminal time for convergence runs");
    app.add_option("--replicas", c.replicas, "replica count K");
    app.add_option("--seed", c.seed, "random seed")->envname("NPT_SEED");
    app.add_option("--threads", c.threads, "worker threads; 1 is serial and bitwise reproducible");

    app.add_option("--rho0", c.rho0, "initial density when volume0 is unset");
    app.add_option("--volume0", c.volume0, "initial volume; 0 means N / rho0");
    app.add_option("--momenta", raw.momenta, "initial momenta: maxwell | zero")
        ->check(CLI::IsMember({"maxwell", "zero"}));

    app.add_option("--level_min", c.level_min, "coarsest level, dt = 2^-level");
    app.add_option("--level_max", c.level_max, "finest measured level");
    app.add_option("--level_ref", c.level_ref, "reference level");
    app.add_option("--coupling", raw.coupling, "convergence noise: brownian | independent")
        ->check(CLI::IsMember({"brownian", "independent"}));
    app.add_option("--observables", c.observables,
                   "test functions: V, V2, exp_sqrt_V, P, rho, sqrtV_exp_sqrt_V")
        ->delimiter(',');
    app.add_option("--p0_list", c.p0_list, "pressures for the virial table")->delimiter(',');

    app.add_option("--bins", c.bins, "histogram bins or tabulation points");
    app.add_option("--hist_min", c.hist_min, "histogram lower bound");
    app.add_option("--hist_max", c.hist_max, "histogram upper bound; equal bounds use the data range");

    app.add_option("--ti_vmin", c.ti_vmin, "first TI grid volume");
    app.add_option("--ti_vmax", c.ti_vmax, "last TI grid volume");
    app.add_option("--ti_points", c.ti_points, "TI grid points");
    app.add_option("--nvt_steps", c.nvt_steps, "NVT steps per TI grid point");
    app.add_option("--nvt_burn_in", c.nvt_burn_in, "NVT burn-in per TI grid point");
    app.add_option("--ti_analytic", c.ti_analytic, "use the ideal-gas pressure N/(beta V)");

    app.add_option("--out", out_dir, "output directory");
}

void apply_raw(ExperimentConfig& c, const RawOptions& raw) {
    c.scheme = parse_scheme(raw.scheme);
    c.field = parse_field_kind(raw.field);
    c.friction = parse_friction_kind(raw.friction);
    c.momenta = parse_momentum_init(raw.momenta);
    c.coupling = parse_coupling(raw.coupling);
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) throw Error(std::string("missing required key '") + key + "'");
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(std::string("type mismatch for key '") + key + "'");
    }
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string list_text(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_double(xs[i]);
    }
    return out + "]";
}

std::string list_text(const std::vector<std::string>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += quote(xs[i]);
    }
    return out + "]";
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        out_ << header << '\n';
    }
    CsvWriter& cell(double x) { return raw(format_double(x)); }
    CsvWriter& cell(std::uint64_t x) { return raw(std::to_string(x)); }
    CsvWriter& raw(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    std::ofstream out_;
    bool first_ = true;
};

struct Outcome {
    std::vector<std::string> outputs;
    std::vector<RunFailure> failures;
};

void run_simulate(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    const auto path = dir / "trajectory.csv";
    CsvWriter csv(path, "step,time,V,rho,P,K,U,H,PV");
    const auto summary = run_trajectory(c, [&](std::uint64_t step, const ObservableRecord& r) {
        csv.cell(step).cell(r.time).cell(r.volume).cell(r.density).cell(r.pressure);
        csv.cell(r.kinetic).cell(r.potential).cell(r.enthalpy).cell(r.pv).end_row();
    });
    o.outputs.push_back(path.string());
    if (summary.failure) o.failures.push_back({0, *summary.failure});
}

void run_convergence_cmd(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    const auto report = run_convergence(c);
    std::string header = "level,dt,failures";
    for (auto phi : report.functions) header += ",mean_" + std::string(test_function_name(phi));
    for (auto phi : report.functions) header += ",err_" + std::string(test_function_name(phi));
    const auto path = dir / "convergence.csv";
    CsvWriter csv(path, header);
    auto row = [&](const ConvergenceLevel& lvl, bool is_ref) {
        csv.raw(is_ref ? "ref" : std::to_string(lvl.level));
        csv.cell(lvl.dt).cell(static_cast<std::uint64_t>(lvl.failures));
        for (double m : lvl.means) csv.cell(m);
        for (std::size_t f = 0; f < report.functions.size(); ++f) {
            if (is_ref) csv.raw("0");
            else csv.cell(lvl.errors[f]);
        }
        csv.end_row();
    };
    for (const auto& lvl : report.levels) row(lvl, false);
    row(report.reference, true);
    csv.raw("slope").raw("").raw("");
    for (std::size_t f = 0; f < report.functions.size(); ++f) csv.raw("");
    for (const auto& fit : report.fits) csv.cell(fit.slope);
    csv.end_row();
    o.outputs.push_back(path.string());
    for (std::size_t f = 0; f < report.functions.size(); ++f) {
        std::cout << "slope " << test_function_name(report.functions[f]) << " "
                  << format_double(report.fits[f].slope) << " residual "
                  << format_double(report.fits[f].residual) << '\n';
        for (auto idx : report.fits[f].excluded) {
            std::cerr << "warning: level " << report.levels[idx].level
                      << " excluded from the fit for " << test_function_name(report.functions[f])
                      << " (nonpositive error)\n";
        }
    }
}

void run_virial_cmd(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    const auto rows = virial_table(c);
    const auto path = dir / "virial.csv";
    CsvWriter csv(path, "p0,mean_P,mean_PV,mean_V,E1,E2");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        csv.cell(r.p0).cell(r.mean_pressure).cell(r.mean_pv).cell(r.mean_volume);
        csv.cell(r.errors.e1).cell(r.errors.e2).end_row();
        if (r.failure) o.failures.push_back({i, *r.failure});
    }
    o.outputs.push_back(path.string());
}

void run_histogram_cmd(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    std::vector<double> samples;
    const auto summary = run_trajectory(
        c, [&](std::uint64_t, const ObservableRecord& r) { samples.push_back(r.volume); });
    if (summary.failure) o.failures.push_back({0, *summary.failure});
    if (samples.empty()) return;
    const bool explicit_range = c.hist_max > c.hist_min;
    const auto h = histogram(samples, c.hist_min, c.hist_max, c.bins, explicit_range);
    const bool exact = c.field == FieldKind::Free;
    const auto path = dir / "histogram.csv";
    CsvWriter csv(path, exact ? "V,density,exact" : "V,density");
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        csv.cell(h.center(i)).cell(h.density[i]);
        if (exact) csv.cell(exact_free_gas_density(h.center(i), c.n, c.beta, c.p0));
        csv.end_row();
    }
    o.outputs.push_back(path.string());
}

void run_ti_cmd(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    const auto grid = uniform_grid(c.ti_vmin, c.ti_vmax, c.ti_points);
    std::vector<double> pressures;
    if (c.ti_analytic) {
        for (double v : grid) pressures.push_back(static_cast<double>(c.n) / (c.beta * v));
    } else {
        pressures = nvt_mean_pressures(c, grid);
    }
    const auto profile = thermodynamic_integration(grid, pressures, c.p0, c.beta);
    const auto path = dir / "ti.csv";
    CsvWriter csv(path, "V,P,F,density");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        csv.cell(grid[i]).cell(pressures[i]).cell(profile.free_energy[i]).cell(profile.density[i]);
        csv.end_row();
    }
    o.outputs.push_back(path.string());
}

void run_exact_cmd(const ExperimentConfig& c, const std::filesystem::path& dir, Outcome& o) {
    double lo = c.hist_min, hi = c.hist_max;
    if (!(hi > lo)) {
        const double mean = static_cast<double>(c.n + 1) / (c.beta * c.p0);
        lo = 0.0;
        hi = mean + 10.0 * std::sqrt(static_cast<double>(c.n + 1)) / (c.beta * c.p0);
    }
    const auto path = dir / "exact_density.csv";
    CsvWriter csv(path, "V,density");
    const double width = (hi - lo) / static_cast<double>(c.bins);
    for (std::size_t i = 0; i < c.bins; ++i) {
        const double v = lo + (static_cast<double>(i) + 0.5) * width;
        csv.cell(v).cell(exact_free_gas_density(v, c.n, c.beta, c.p0)).end_row();
    }
    o.outputs.push_back(path.string());
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ParsedCommand parse_command_line(const std::vector<std::string>& args) {
    ParsedCommand cmd;
    RawOptions raw;
    CLI::App app{"Isothermal-isobaric Langevin sampler", "npt"};
    bind_options(app, cmd.config, raw, cmd.out_dir);
    app.set_config("--config", "", "flat key = value config file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    for (const auto& [name, description] : kSubcommands) app.add_subcommand(name, description)->fallthrough();
    app.set_version_flag("--version", kVersion);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        cmd.help = true;
        cmd.help_text = app.help();
        return cmd;
    } catch (const CLI::CallForVersion&) {
        cmd.help = true;
        cmd.help_text = std::string(kVersion) + "\n";
        return cmd;
    } catch (const CLI::ParseError& e) {
        throw Error(e.what());
    }
    cmd.subcommand = app.get_subcommands().front()->get_name();
    apply_raw(cmd.config, raw);
    validate(cmd.config);
    parse_test_functions(cmd.config.observables);
    return cmd;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return nlohmann::json{
        {"scheme", scheme_name(c.scheme)},
        {"field", field_kind_name(c.field)},
        {"quartic_weight", c.quartic_weight},
        {"lj_cutoff", c.lj_cutoff},
        {"n", c.n},
        {"beta", c.beta},
        {"p0", c.p0},
        {"mass", c.mass},
        {"gamma", c.gamma},
        {"friction", friction_kind_name(c.friction)},
        {"lambda", c.lambda},
        {"tau_p", c.tau_p},
        {"beta_t", c.beta_t},
        {"dt", c.dt},
        {"steps", c.steps},
        {"burn_in", c.burn_in},
        {"stride", c.stride},
        {"t_end", c.t_end},
        {"replicas", c.replicas},
        {"seed", c.seed},
        {"threads", c.threads},
        {"rho0", c.rho0},
        {"volume0", c.volume0},
        {"momenta", momentum_init_name(c.momenta)},
        {"level_min", c.level_min},
        {"level_max", c.level_max},
        {"level_ref", c.level_ref},
        {"coupling", coupling_name(c.coupling)},
        {"observables", c.observables},
        {"p0_list", c.p0_list},
        {"bins", c.bins},
        {"hist_min", c.hist_min},
        {"hist_max", c.hist_max},
        {"ti_vmin", c.ti_vmin},
        {"ti_vmax", c.ti_vmax},
        {"ti_points", c.ti_points},
        {"nvt_steps", c.nvt_steps},
        {"nvt_burn_in", c.nvt_burn_in},
        {"ti_analytic", c.ti_analytic},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    const auto known = config_to_json(ExperimentConfig{});
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw Error("unknown key '" + key + "'");
    }
    ExperimentConfig c;
    std::string scheme, field, friction, momenta, coupling;
    read_key(j, "scheme", scheme);
    read_key(j, "field", field);
    read_key(j, "friction", friction);
    read_key(j, "momenta", momenta);
    read_key(j, "coupling", coupling);
    c.scheme = parse_scheme(scheme);
    c.field = parse_field_kind(field);
    c.friction = parse_friction_kind(friction);
    c.momenta = parse_momentum_init(momenta);
    c.coupling = parse_coupling(coupling);
    read_key(j, "quartic_weight", c.quartic_weight);
    read_key(j, "lj_cutoff", c.lj_cutoff);
    read_key(j, "n", c.n);
    read_key(j, "beta", c.beta);
    read_key(j, "p0", c.p0);
    read_key(j, "mass", c.mass);
    read_key(j, "gamma", c.gamma);
    read_key(j, "lambda", c.lambda);
    read_key(j, "tau_p", c.tau_p);
    read_key(j, "beta_t", c.beta_t);
    read_key(j, "dt", c.dt);
    read_key(j, "steps", c.steps);
    read_key(j, "burn_in", c.burn_in);
    read_key(j, "stride", c.stride);
    read_key(j, "t_end", c.t_end);
    read_key(j, "replicas", c.replicas);
    read_key(j, "seed", c.seed);
    read_key(j, "threads", c.threads);
    read_key(j, "rho0", c.rho0);
    read_key(j, "volume0", c.volume0);
    read_key(j, "level_min", c.level_min);
    read_key(j, "level_max", c.level_max);
    read_key(j, "level_ref", c.level_ref);
    read_key(j, "observables", c.observables);
    read_key(j, "p0_list", c.p0_list);
    read_key(j, "bins", c.bins);
    read_key(j, "hist_min", c.hist_min);
    read_key(j, "hist_max", c.hist_max);
    read_key(j, "ti_vmin", c.ti_vmin);
    read_key(j, "ti_vmax", c.ti_vmax);
    read_key(j, "ti_points", c.ti_points);
    read_key(j, "nvt_steps", c.nvt_steps);
    read_key(j, "nvt_burn_in", c.nvt_burn_in);
    read_key(j, "ti_analytic", c.ti_analytic);
    validate(c);
    return c;
}

std::string config_to_text(const ExperimentConfig& c) {
    std::ostringstream out;
    const auto j = config_to_json(c);
    for (const auto& [key, value] : j.items()) {
        out << key << " = ";
        if (value.is_string()) {
            out << quote(value.get<std::string>());
        } else if (value.is_boolean()) {
            out << (value.get<bool>() ? "true" : "false");
        } else if (value.is_array() && key == "observables") {
            out << list_text(value.get<std::vector<std::string>>());
        } else if (value.is_array()) {
            out << list_text(value.get<std::vector<double>>());
        } else if (value.is_number_float()) {
            out << format_double(value.get<double>());
        } else {
            out << value.dump();
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::json make_manifest(const ExperimentConfig& config, const std::vector<RunFailure>& failures,
                             double wall_ms, const std::vector<std::string>& outputs) {
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : failures) {
        fails.push_back({{"stream", f.stream},
                         {"step", f.info.step},
                         {"message", f.info.message},
                         {"volume_before", f.info.volume_before},
                         {"attempted_volume", f.info.attempted_volume}});
    }
    return nlohmann::json{{"config", config_to_json(config)},
                          {"seed", config.seed},
                          {"version", kVersion},
                          {"failures", fails},
                          {"wall_ms", wall_ms},
                          {"outputs", outputs}};
}

int dispatch(const ParsedCommand& command) {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(command.out_dir);
    std::filesystem::create_directories(dir);
    const ExperimentConfig& c = command.config;
    Outcome outcome;
    const std::string& sub = command.subcommand;
    if (sub == "simulate") run_simulate(c, dir, outcome);
    else if (sub == "convergence") run_convergence_cmd(c, dir, outcome);
    else if (sub == "virial") run_virial_cmd(c, dir, outcome);
    else if (sub == "histogram") run_histogram_cmd(c, dir, outcome);
    else if (sub == "ti") run_ti_cmd(c, dir, outcome);
    else if (sub == "exact-density") run_exact_cmd(c, dir, outcome);
    else throw Error("unknown subcommand '" + sub + "'");

    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const auto manifest_path = dir / "manifest.json";
    std::ofstream(manifest_path) << make_manifest(c, outcome.failures, wall_ms, outcome.outputs).dump(2)
                                 << '\n';
    return outcome.failures.empty() ? 0 : 2;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const auto command = parse_command_line(args);
        if (command.help) {
            std::cout << command.help_text;
            return 0;
        }
        return dispatch(command);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
        return 1;
    }
}

}  // namespace npt::cli
